/*
 * Copyright 2026 The Dualrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Coverage expansion for cold-start items.
//
// Data augmentation substitutes similar items into real co-purchase pairs:
//   replace single: (a', b) with count floor(gamma * c_ab * s(a, a'))
//   replace both:   (a', b') with count floor(gamma * c_ab * (s_a + s_b) / 2)
// Inference augmentation answers an unknown target through its most
// similar in-vocabulary item.

#ifndef DUALREC_AUGMENT_HPP_
#define DUALREC_AUGMENT_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "dualrec/common.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/sgns.hpp"

namespace dualrec {

/// Item-to-item similarity with scores in [0, 1]. Implementations must be
/// safe for concurrent const calls and never return the query item.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;

  /// Up to k items with score >= min_score, best first. Throws
  /// OutOfCoverage for an unknown item.
  virtual std::vector<Scored> top_k(const ItemId& item, std::size_t k,
                                    double min_score) const = 0;
  virtual bool knows(const ItemId& item) const = 0;

  /// Best-scoring item accepted by `accept`, or nullopt if none exists.
  /// The default widens top_k until a match appears.
  virtual std::optional<Scored> best_match(
      const ItemId& item, const std::function<bool(const ItemId&)>& accept) const;
};

/// IN_IN cosine over a (click-trained) model, mapped to [0, 1] by
/// (cos + 1) / 2.
class EmbeddingSimilarity final : public SimilarityProvider {
 public:
  explicit EmbeddingSimilarity(DualEmbedding model, int threads = 1);

  std::vector<Scored> top_k(const ItemId& item, std::size_t k,
                            double min_score) const override;
  bool knows(const ItemId& item) const override { return model_.contains(item); }
  std::optional<Scored> best_match(
      const ItemId& item,
      const std::function<bool(const ItemId&)>& accept) const override;

  const DualEmbedding& model() const { return model_; }

 private:
  DualEmbedding model_;
  std::unique_ptr<ExactIndex> index_;
};

struct AugmentConfig {
  double gamma = 0.5;
  std::size_t k_similar = 3;
  double min_similarity = 0.6;  // theta
  int threads = 1;

  void validate() const;  // gamma in (0, 1), k >= 1, theta in [0, 1]
};

enum class PairSide { kLeft, kRight };

/// floor(gamma * count * score).
std::uint64_t single_count(std::uint64_t count, double score, double gamma);
/// floor(gamma * count * (score_a + score_b) / 2).
std::uint64_t both_count(std::uint64_t count, double score_a, double score_b,
                         double gamma);

/// Synthetic pair replacing one member of `pair` (kLeft replaces item_a).
/// Empty when the count floors to 0, the substitute equals a pair member,
/// or the result already exists in `real`.
std::optional<PairRecord> replace_single(const PairRecord& pair,
                                         const Scored& substitute, PairSide side,
                                         double gamma, const PairDataset& real);

/// Synthetic pair replacing both members; empty under the same rules or
/// when the two substitutes coincide.
std::optional<PairRecord> replace_both(const PairRecord& pair, const Scored& sub_a,
                                       const Scored& sub_b, double gamma,
                                       const PairDataset& real);

struct AuditRecord {
  PairKey source;
  std::uint64_t source_count = 0;
  PairKey synthetic;
  std::optional<Scored> substitute_a;  // replaces source.first
  std::optional<Scored> substitute_b;  // replaces source.second
  std::uint64_t count = 0;
  Provenance provenance = Provenance::kSyntheticSingle;
};

struct AugmentResult {
  PairDataset dataset;  // real and synthetic pairs
  std::vector<AuditRecord> audit;  // winning record per synthetic pair
  /// Candidates generated per real pair (same order as the input), before
  /// any filtering.
  std::vector<std::size_t> candidates_per_pair;
  std::size_t skipped_items = 0;  // provider failures
  std::uint64_t real_mass = 0;
  std::uint64_t synthetic_mass = 0;
};

/// Adds synthetic pairs built from up to k similar items per pair member.
/// When a pair is produced from several real pairs the largest count wins.
/// `taxonomy` (built from real pairs only) filters synthetic candidates.
AugmentResult augment_dataset(const PairDataset& real,
                              const SimilarityProvider& similarity,
                              const AugmentConfig& cfg,
                              const TaxonomyFilter* taxonomy = nullptr);

/// Serial reference for augment_dataset; identical output.
AugmentResult augment_dataset_serial(const PairDataset& real,
                                     const SimilarityProvider& similarity,
                                     const AugmentConfig& cfg,
                                     const TaxonomyFilter* taxonomy = nullptr);

/// `source_a source_b source_count synthetic_a synthetic_b sub_a score_a
/// sub_b score_b count provenance` plus a trailing mass-ratio comment.
void write_audit(std::ostream& out, const AugmentResult& result);

/// IN_OUT query with a fallback for items outside the model vocabulary:
/// the provider's best in-vocabulary match is queried instead and recorded
/// as the proxy. Throws OutOfCoverage if neither knows the target.
RecommendationList query_with_ia(const ItemId& target, const DualEmbedding& model,
                                 const SimilarityProvider& similarity,
                                 std::size_t k, const VectorIndex& out_index,
                                 const QueryOptions& options = {});

}  // namespace dualrec

#endif  // DUALREC_AUGMENT_HPP_

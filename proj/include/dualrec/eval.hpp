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

// Offline evaluation against held-out co-purchases.
//
//   Precision_q@K = |L_q n R_q^K| / K
//   Recall_q@K    = |L_q n R_q^K| / |L_q|
//
// averaged over every query q. A query the recommender cannot answer
// (OutOfCoverage) contributes zeros rather than being dropped.

#ifndef DUALREC_EVAL_HPP_
#define DUALREC_EVAL_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualrec/common.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/retrieval.hpp"

namespace dualrec {

/// Per query item, its co-purchased items ranked by descending co-count
/// (ties by ascending id).
struct GroundTruth {
  std::map<ItemId, std::vector<ItemId>> lists;

  std::size_t size() const { return lists.size(); }
  std::vector<ItemId> queries() const;
  /// Only the given queries (unknown ones ignored).
  GroundTruth subset(std::span<const ItemId> queries) const;
};

GroundTruth ground_truth_from_pairs(const PairDataset& pairs);

struct GroundTruthOptions {
  std::uint64_t min_pair_count = 1;
  std::optional<double> min_pmi;
};

/// Pairs the test sessions like the training corpus and ranks partners.
/// Throws Error("evaluation error") when nothing remains.
GroundTruth build_ground_truth(std::span<const Session> test_sessions,
                               const GroundTruthOptions& options = {});

struct HitCount {
  std::size_t hits = 0;        // |L_q n R_q^K|
  std::size_t k = 0;
  std::size_t truth_size = 0;  // |L_q|

  double precision() const {
    return k ? static_cast<double>(hits) / static_cast<double>(k) : 0.0;
  }
  double recall() const {
    return truth_size ? static_cast<double>(hits) / static_cast<double>(truth_size)
                      : 0.0;
  }
};

/// Only the first K entries of `ranked` count; the precision denominator
/// stays K even if fewer were returned. Throws DomainError for K == 0.
HitCount precision_recall_at_k(std::span<const ItemId> truth,
                               std::span<const ItemId> ranked, std::size_t k);

/// item -> ranked candidates; may throw OutOfCoverage. Must be safe to call
/// concurrently.
using Recommender = std::function<RecommendationList(const ItemId&, std::size_t)>;

struct EvalRow {
  std::string model;
  std::string split = "combined";
  std::size_t k = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> product_coverage;
  std::optional<double> taxonomy_coverage;
  std::size_t queries = 0;
  std::size_t out_of_coverage = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  const EvalRow* find(const std::string& model, const std::string& split,
                      std::size_t k) const;
  void append(const EvalReport& other);
  std::string to_table() const;
  /// One JSON object per row: model, split, K, precision, recall,
  /// product_coverage, taxonomy_coverage.
  std::string to_jsonl() const;
};

struct EvalOptions {
  std::string model_name = "model";
  std::string split = "combined";
  std::vector<std::size_t> ks{20, 50};
  int threads = 1;
};

EvalReport evaluate(const Recommender& recommender, const GroundTruth& truth,
                    const EvalOptions& options);

struct CoverageSplit {
  std::vector<ItemId> in_coverage;
  std::vector<ItemId> out_of_coverage;
};

CoverageSplit split_coverage(const GroundTruth& truth,
                             const std::function<bool(const ItemId&)>& in_vocab);

struct CoverageReport {
  double product_coverage = 0.0;
  double taxonomy_coverage = 0.0;
  std::size_t covered_queries = 0;
  std::size_t covered_taxonomies = 0;
};

/// Product coverage: share of queries with at least one candidate.
/// Taxonomy coverage: share of the catalog's distinct taxonomies that
/// contain at least one covered query item.
CoverageReport coverage_report(const Recommender& recommender,
                               const Catalog& catalog, const GroundTruth& truth,
                               int threads = 1);

struct TaxonomyEvalOptions {
  std::string model_name = "model";
  std::vector<std::size_t> ks{1, 3};
  std::size_t fetch = 20;  // candidates requested before mapping
  int threads = 1;
};

/// Ordered, de-duplicated taxonomy list for items (unmapped items skipped).
std::vector<std::string> map_to_taxonomies(std::span<const ItemId> items,
                                           const Catalog& catalog,
                                           std::size_t* unmapped = nullptr);

/// Precision/recall computed on taxonomy lists instead of item lists.
EvalReport taxonomy_eval(const Recommender& recommender, const GroundTruth& truth,
                         const Catalog& catalog, const TaxonomyEvalOptions& options);

enum class BaselineKind { kTopSellers, kCoPurchases, kRandom };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline(std::string_view text);

struct BaselineData {
  std::unordered_map<ItemId, std::uint64_t> item_sales;  // training vocab
  PairDataset pairs;
};

/// Top-sellers: global best sellers minus the target. Co-purchases: the
/// target's partners by descending count (OutOfCoverage if none). Random:
/// uniform sample of the training vocabulary, seeded per (seed, target).
Recommender make_baseline(BaselineKind kind, BaselineData data, std::uint64_t seed);

/// Wraps retrieval as a recommender.
Recommender make_retrieval_recommender(const DualEmbedding& model,
                                       const VectorIndex& index, Variant variant,
                                       QueryOptions options = {});

}  // namespace dualrec

#endif  // DUALREC_EVAL_HPP_

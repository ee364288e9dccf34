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

// Cosine retrieval over one side of a dual embedding.
//
// A variant picks the query matrix and the index matrix:
//   IN_OUT   v_p  against W_out   (complements)
//   IN_IN    v_p  against W_in    (substitutes)
//   OUT_OUT  v'_p against W_out
//   OUT_IN   v'_p against W_in    (off unless explicitly enabled)
//
// ExactIndex is the reference; AnnIndex (a hierarchical navigable small
// world graph) must answer through the same interface.

#ifndef DUALREC_RETRIEVAL_HPP_
#define DUALREC_RETRIEVAL_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualrec/common.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/sgns.hpp"

namespace dualrec {

enum class Variant { kInOut, kInIn, kOutOut, kOutIn };
enum class MatrixSide { kInput, kOutput };

/// "in-out", "in-in", "out-out", "out-in".
std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);  // throws ConfigError
std::string_view to_string(MatrixSide side);
MatrixSide parse_side(std::string_view text);  // "in" / "out"

MatrixSide query_side(Variant variant);
MatrixSide index_side(Variant variant);

/// u.v / (|u||v|). Throws DomainError if either vector is zero.
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
  std::uint32_t row = 0;  // model row
  float score = 0.0f;     // cosine
};

/// Top-k cosine search over the nonzero rows of one model matrix.
/// Results are sorted by descending score with ties broken by ascending
/// row (= ascending item id).
class VectorIndex {
 public:
  virtual ~VectorIndex() = default;
  virtual std::vector<Neighbor> search(
      std::span<const float> query, std::size_t k,
      std::optional<std::uint32_t> exclude_row = std::nullopt) const = 0;
  virtual MatrixSide side() const = 0;
  /// Number of indexed (nonzero) rows.
  virtual std::size_t size() const = 0;
};

class ExactIndex final : public VectorIndex {
 public:
  /// Zero rows are skipped with a warning. `threads` != 1 scores rows with
  /// the parallel kernel.
  ExactIndex(const DualEmbedding& model, MatrixSide side, int threads = 1);

  std::vector<Neighbor> search(
      std::span<const float> query, std::size_t k,
      std::optional<std::uint32_t> exclude_row = std::nullopt) const override;
  MatrixSide side() const override { return side_; }
  std::size_t size() const override { return rows_.size(); }

 private:
  MatrixSide side_;
  std::size_t dim_;
  int threads_;
  std::vector<std::uint32_t> rows_;  // local -> model row
  std::vector<std::int64_t> local_of_;  // model row -> local, -1 if skipped
  std::vector<float> vectors_;  // unit-length rows
};

struct AnnConfig {
  std::size_t graph_degree = 16;  // M
  std::size_t ef_construction = 200;
  std::size_t ef_search = 100;
  std::uint64_t seed = 42;

  void validate() const;  // M >= 2, beams >= 1
};

class AnnIndex final : public VectorIndex {
 public:
  /// Throws ConfigError when M < 2 or fewer than two nonzero rows exist.
  AnnIndex(const DualEmbedding& model, MatrixSide side, const AnnConfig& cfg);

  std::vector<Neighbor> search(
      std::span<const float> query, std::size_t k,
      std::optional<std::uint32_t> exclude_row = std::nullopt) const override;
  MatrixSide side() const override { return side_; }
  std::size_t size() const override { return rows_.size(); }

  void set_ef_search(std::size_t ef) { cfg_.ef_search = ef; }
  const AnnConfig& config() const { return cfg_; }
  int max_level() const { return max_level_; }
  /// Neighbours of a local node at one layer (for tests and diagnostics).
  std::span<const std::uint32_t> links(std::uint32_t node, int level) const;

  /// Header "ANNIDX 1 <n> <d> <M>\n", then binary graph data. Vectors are
  /// not stored; the model file is referenced by its fingerprint.
  void save(std::ostream& out, std::string_view model_fingerprint) const;
  /// Throws InputError when the stored fingerprint differs from the one
  /// given for `model`.
  static AnnIndex load(std::istream& in, const DualEmbedding& model,
                       std::string_view model_fingerprint);

 private:
  AnnIndex() = default;
  void init_vectors(const DualEmbedding& model);
  void insert(std::uint32_t node, int level);
  std::vector<Neighbor> exhaustive(std::span<const float> query, std::size_t k,
                                   std::optional<std::uint32_t> exclude) const;

  MatrixSide side_ = MatrixSide::kOutput;
  std::size_t dim_ = 0;
  AnnConfig cfg_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::int64_t> local_of_;
  std::vector<float> vectors_;
  std::vector<int> levels_;
  // links_[node][level] = neighbour list
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
  std::uint32_t entry_ = 0;
  int max_level_ = -1;

  friend struct AnnSearch;
};

struct RecommendationList {
  ItemId target;
  std::optional<Variant> variant;  // empty for baselines
  std::vector<Scored> entries;     // descending score, target excluded
  /// Set when the list was produced for a stand-in item.
  std::optional<ItemId> proxy;
};

struct QueryOptions {
  /// Drops candidates whose full taxonomy equals the target's.
  const Catalog* exclude_same_taxonomy = nullptr;
};

/// Top-K items for `target` under `variant`. The index must be built over
/// the variant's index side. Throws OutOfCoverage when the target is not in
/// the model and ConfigError on a mismatched index or K == 0.
RecommendationList query(const DualEmbedding& model, const ItemId& target,
                         Variant variant, std::size_t k,
                         const VectorIndex& index,
                         const QueryOptions& options = {});

/// Checks the list invariants (self exclusion, ordering, bounds, no
/// duplicates); returns a description of the first violation.
std::optional<std::string> check_recommendations(const RecommendationList& list);

}  // namespace dualrec

#endif  // DUALREC_RETRIEVAL_HPP_

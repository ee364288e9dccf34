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

#include "dualrec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/kernels.hpp"

namespace dualrec {

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kInOut:
      return "in-out";
    case Variant::kInIn:
      return "in-in";
    case Variant::kOutOut:
      return "out-out";
    case Variant::kOutIn:
      return "out-in";
  }
  return "in-out";
}

Variant parse_variant(std::string_view text) {
  if (text == "in-out") return Variant::kInOut;
  if (text == "in-in") return Variant::kInIn;
  if (text == "out-out") return Variant::kOutOut;
  if (text == "out-in") return Variant::kOutIn;
  throw ConfigError(fmt::format("unknown retrieval variant '{}'", text));
}

std::string_view to_string(MatrixSide side) {
  return side == MatrixSide::kInput ? "in" : "out";
}

MatrixSide parse_side(std::string_view text) {
  if (text == "in") return MatrixSide::kInput;
  if (text == "out") return MatrixSide::kOutput;
  throw ConfigError(fmt::format("unknown matrix side '{}'", text));
}

MatrixSide query_side(Variant variant) {
  return (variant == Variant::kInOut || variant == Variant::kInIn)
             ? MatrixSide::kInput
             : MatrixSide::kOutput;
}

MatrixSide index_side(Variant variant) {
  return (variant == Variant::kInOut || variant == Variant::kOutOut)
             ? MatrixSide::kOutput
             : MatrixSide::kInput;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  double uv = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DomainError("cosine of a zero vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

namespace {

std::span<const float> side_row(const DualEmbedding& model, MatrixSide side,
                                std::uint32_t row) {
  return side == MatrixSide::kInput ? model.input_row(row)
                                    : model.output_row(row);
}

bool is_zero(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

}  // namespace

ExactIndex::ExactIndex(const DualEmbedding& model, MatrixSide side, int threads)
    : side_(side), dim_(model.dim()), threads_(threads),
      local_of_(model.size(), -1) {
  std::size_t skipped = 0;
  for (std::uint32_t r = 0; r < model.size(); ++r) {
    const auto row = side_row(model, side, r);
    if (is_zero(row)) {
      ++skipped;
      continue;
    }
    local_of_[r] = static_cast<std::int64_t>(rows_.size());
    rows_.push_back(r);
    const std::size_t at = vectors_.size();
    vectors_.insert(vectors_.end(), row.begin(), row.end());
    kernels::normalize(std::span<float>(vectors_.data() + at, dim_));
  }
  if (skipped > 0) {
    spdlog::warn("{} zero rows skipped in {}-side index", skipped,
                 to_string(side));
  }
}

std::vector<Neighbor> ExactIndex::search(
    std::span<const float> query, std::size_t k,
    std::optional<std::uint32_t> exclude_row) const {
  if (k == 0 || rows_.empty()) return {};
  std::vector<float> q(query.begin(), query.end());
  if (kernels::normalize(q) == 0.0f) return {};
  std::vector<float> scores(rows_.size());
  if (threads_ == 1) {
    kernels::score_rows_serial(vectors_, dim_, q, scores);
  } else {
    kernels::score_rows_parallel(vectors_, dim_, q, scores, threads_);
  }
  std::optional<std::uint32_t> exclude_local;
  if (exclude_row && *exclude_row < local_of_.size() &&
      local_of_[*exclude_row] >= 0) {
    exclude_local = static_cast<std::uint32_t>(local_of_[*exclude_row]);
  }
  std::vector<Neighbor> out;
  for (auto local : kernels::top_k(scores, k, exclude_local)) {
    out.push_back({rows_[local], std::clamp(scores[local], -1.0f, 1.0f)});
  }
  return out;
}

void AnnConfig::validate() const {
  if (graph_degree < 2) throw ConfigError("ANN graph degree M must be >= 2");
  if (ef_construction < 1 || ef_search < 1) {
    throw ConfigError("ANN beam widths must be >= 1");
  }
}

RecommendationList query(const DualEmbedding& model, const ItemId& target,
                         Variant variant, std::size_t k,
                         const VectorIndex& index, const QueryOptions& options) {
  if (k == 0) throw ConfigError("K must be >= 1");
  if (index.side() != index_side(variant)) {
    throw ConfigError(fmt::format("variant {} needs an {}-side index",
                                  to_string(variant),
                                  to_string(index_side(variant))));
  }
  const auto row = model.row_of(target);
  if (!row) throw OutOfCoverage(target);

  RecommendationList list;
  list.target = target;
  list.variant = variant;
  const auto qvec = side_row(model, query_side(variant), *row);
  if (is_zero(qvec)) {
    spdlog::warn("zero {}-side vector for {}; no candidates",
                 to_string(query_side(variant)), target);
    return list;
  }

  const std::string* target_taxonomy =
      options.exclude_same_taxonomy
          ? options.exclude_same_taxonomy->taxonomy_of(target)
          : nullptr;
  std::size_t fetch = target_taxonomy ? 2 * k : k;
  while (true) {
    const auto hits = index.search(qvec, fetch, *row);
    list.entries.clear();
    for (const auto& h : hits) {
      const auto& item = model.vocab()[h.row];
      if (target_taxonomy) {
        const auto* t = options.exclude_same_taxonomy->taxonomy_of(item);
        if (t && *t == *target_taxonomy) continue;
      }
      list.entries.push_back({item, static_cast<double>(h.score)});
      if (list.entries.size() == k) break;
    }
    if (list.entries.size() == k || hits.size() < fetch ||
        fetch >= index.size()) {
      break;
    }
    fetch *= 2;
  }
  return list;
}

std::optional<std::string> check_recommendations(const RecommendationList& list) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (e.item == list.target) return "target present in its own list";
    if (!seen.insert(e.item).second) return "duplicate item " + e.item;
    if (!(e.score >= -1.0 && e.score <= 1.0)) {
      return fmt::format("score {} out of [-1, 1]", e.score);
    }
    if (i > 0 && e.score > list.entries[i - 1].score) {
      return fmt::format("scores increase at rank {}", i + 1);
    }
  }
  return std::nullopt;
}

}  // namespace dualrec

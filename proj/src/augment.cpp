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

#include "dualrec/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/kernels.hpp"

namespace dualrec {

std::optional<Scored> SimilarityProvider::best_match(
    const ItemId& item, const std::function<bool(const ItemId&)>& accept) const {
  for (std::size_t k = 16;; k *= 2) {
    const auto candidates = top_k(item, k, 0.0);
    for (const auto& c : candidates) {
      if (accept(c.item)) return c;
    }
    if (candidates.size() < k) return std::nullopt;
  }
}

EmbeddingSimilarity::EmbeddingSimilarity(DualEmbedding model, int threads)
    : model_(std::move(model)),
      index_(std::make_unique<ExactIndex>(model_, MatrixSide::kInput, threads)) {}

std::vector<Scored> EmbeddingSimilarity::top_k(const ItemId& item, std::size_t k,
                                               double min_score) const {
  const auto row = model_.row_of(item);
  if (!row) throw OutOfCoverage(item);
  std::vector<Scored> out;
  for (const auto& n : index_->search(model_.input_row(*row), k, *row)) {
    const double s = (static_cast<double>(n.score) + 1.0) / 2.0;
    if (s < min_score) break;
    out.push_back({model_.vocab()[n.row], s});
  }
  return out;
}

std::optional<Scored> EmbeddingSimilarity::best_match(
    const ItemId& item, const std::function<bool(const ItemId&)>& accept) const {
  const auto row = model_.row_of(item);
  if (!row) throw OutOfCoverage(item);
  for (const auto& n : index_->search(model_.input_row(*row), index_->size(), *row)) {
    const auto& candidate = model_.vocab()[n.row];
    if (accept(candidate)) {
      return Scored{candidate, (static_cast<double>(n.score) + 1.0) / 2.0};
    }
  }
  return std::nullopt;
}

void AugmentConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0, 1)");
  if (k_similar < 1) throw ConfigError("k_similar must be >= 1");
  if (!(min_similarity >= 0.0 && min_similarity <= 1.0)) {
    throw ConfigError("min_similarity must be in [0, 1]");
  }
}

std::uint64_t single_count(std::uint64_t count, double score, double gamma) {
  const double v = gamma * static_cast<double>(count) * score;
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::floor(v));
}

std::uint64_t both_count(std::uint64_t count, double score_a, double score_b,
                         double gamma) {
  const double v = gamma * static_cast<double>(count) * ((score_a + score_b) / 2.0);
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::floor(v));
}

std::optional<PairRecord> replace_single(const PairRecord& pair,
                                         const Scored& substitute, PairSide side,
                                         double gamma, const PairDataset& real) {
  if (substitute.item == pair.item_a || substitute.item == pair.item_b) {
    return std::nullopt;
  }
  const std::uint64_t count = single_count(pair.count, substitute.score, gamma);
  if (count == 0) return std::nullopt;
  const ItemId& kept = side == PairSide::kLeft ? pair.item_b : pair.item_a;
  if (real.contains(substitute.item, kept)) return std::nullopt;
  auto [a, b] = canonical_pair(substitute.item, kept);
  return PairRecord{std::move(a), std::move(b), count, 0.0,
                    Provenance::kSyntheticSingle};
}

std::optional<PairRecord> replace_both(const PairRecord& pair, const Scored& sub_a,
                                       const Scored& sub_b, double gamma,
                                       const PairDataset& real) {
  if (sub_a.item == sub_b.item) return std::nullopt;
  for (const auto* s : {&sub_a, &sub_b}) {
    if (s->item == pair.item_a || s->item == pair.item_b) return std::nullopt;
  }
  const std::uint64_t count = both_count(pair.count, sub_a.score, sub_b.score, gamma);
  if (count == 0) return std::nullopt;
  if (real.contains(sub_a.item, sub_b.item)) return std::nullopt;
  auto [a, b] = canonical_pair(sub_a.item, sub_b.item);
  return PairRecord{std::move(a), std::move(b), count, 0.0,
                    Provenance::kSyntheticBoth};
}

namespace {

struct Substitutes {
  bool ok = false;
  std::vector<Scored> items;
};

std::vector<Scored> pick(const Substitutes& subs, const ItemId& partner,
                         std::size_t k) {
  std::vector<Scored> out;
  for (const auto& s : subs.items) {
    if (s.item == partner) continue;
    out.push_back(s);
    if (out.size() == k) break;
  }
  return out;
}

bool taxonomy_accepts(const TaxonomyFilter* taxonomy, const PairRecord& r) {
  if (!taxonomy) return true;
  const auto verdict = taxonomy->check(r.item_a, r.item_b);
  return verdict == TaxonomyVerdict::kPass ||
         verdict == TaxonomyVerdict::kMissingFromCatalog;
}

AugmentResult augment_impl(const PairDataset& real,
                           const SimilarityProvider& similarity,
                           const AugmentConfig& cfg,
                           const TaxonomyFilter* taxonomy, int threads) {
  cfg.validate();
  const auto items = real.items();
  const auto n_items = static_cast<std::int64_t>(items.size());
  std::vector<Substitutes> subs(items.size());
  const int workers = kernels::resolve_threads(threads);
  (void)workers;

#pragma omp parallel for num_threads(workers) schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n_items; ++i) {
    auto& s = subs[static_cast<std::size_t>(i)];
    try {
      // One extra so the partner can be dropped and k still remain.
      s.items = similarity.top_k(items[static_cast<std::size_t>(i)],
                                 cfg.k_similar + 1, cfg.min_similarity);
      s.ok = true;
    } catch (const Error&) {
      s.ok = false;
    }
  }
  const auto subs_of = [&](const ItemId& item) -> const Substitutes& {
    const auto it = std::lower_bound(items.begin(), items.end(), item);
    return subs[static_cast<std::size_t>(it - items.begin())];
  };

  const auto& records = real.records();
  const auto n_pairs = static_cast<std::int64_t>(records.size());
  std::vector<std::vector<AuditRecord>> per_pair(records.size());
  std::vector<std::size_t> generated(records.size(), 0);

#pragma omp parallel for num_threads(workers) schedule(dynamic, 64)
  for (std::int64_t p = 0; p < n_pairs; ++p) {
    const auto& r = records[static_cast<std::size_t>(p)];
    const auto left = pick(subs_of(r.item_a), r.item_b, cfg.k_similar);
    const auto right = pick(subs_of(r.item_b), r.item_a, cfg.k_similar);
    auto& out = per_pair[static_cast<std::size_t>(p)];
    std::size_t made = 0;
    const auto accept = [&](std::optional<PairRecord> rec,
                            std::optional<Scored> sa, std::optional<Scored> sb) {
      if (!rec || !taxonomy_accepts(taxonomy, *rec)) return;
      out.push_back(AuditRecord{r.key(), r.count, rec->key(), std::move(sa),
                                std::move(sb), rec->count, rec->provenance});
    };
    for (const auto& s : left) {
      ++made;
      accept(replace_single(r, s, PairSide::kLeft, cfg.gamma, real), s, std::nullopt);
    }
    for (const auto& s : right) {
      ++made;
      accept(replace_single(r, s, PairSide::kRight, cfg.gamma, real), std::nullopt, s);
    }
    for (const auto& sa : left) {
      for (const auto& sb : right) {
        if (sa.item == sb.item) continue;
        ++made;
        accept(replace_both(r, sa, sb, cfg.gamma, real), sa, sb);
      }
    }
    generated[static_cast<std::size_t>(p)] = made;
  }

  AugmentResult result;
  for (const auto& s : subs) {
    if (!s.ok) ++result.skipped_items;
  }
  if (result.skipped_items > 0) {
    spdlog::warn("similarity provider failed on {} items; their substitutions "
                 "were skipped",
                 result.skipped_items);
  }

  // Deterministic merge in input order; the first maximum wins.
  std::map<PairKey, AuditRecord> best;
  for (auto& list : per_pair) {
    for (auto& rec : list) {
      auto it = best.find(rec.synthetic);
      if (it == best.end()) {
        best.emplace(rec.synthetic, std::move(rec));
      } else if (rec.count > it->second.count) {
        it->second = std::move(rec);
      }
    }
  }

  std::vector<PairRecord> merged(records.begin(), records.end());
  result.real_mass = real.total_count();
  for (auto& [key, rec] : best) {
    merged.push_back(PairRecord{key.first, key.second, rec.count, 0.0, rec.provenance});
    result.synthetic_mass += rec.count;
    result.audit.push_back(std::move(rec));
  }
  result.dataset = PairDataset::from_records(std::move(merged));
  result.candidates_per_pair = std::move(generated);
  spdlog::info("augmentation: {} real pairs, {} synthetic pairs, synthetic/real "
               "mass {:.4f}",
               real.size(), result.audit.size(),
               result.real_mass ? static_cast<double>(result.synthetic_mass) /
                                      static_cast<double>(result.real_mass)
                                : 0.0);
  return result;
}

}  // namespace

AugmentResult augment_dataset(const PairDataset& real,
                              const SimilarityProvider& similarity,
                              const AugmentConfig& cfg,
                              const TaxonomyFilter* taxonomy) {
  return augment_impl(real, similarity, cfg, taxonomy, cfg.threads);
}

AugmentResult augment_dataset_serial(const PairDataset& real,
                                     const SimilarityProvider& similarity,
                                     const AugmentConfig& cfg,
                                     const TaxonomyFilter* taxonomy) {
  return augment_impl(real, similarity, cfg, taxonomy, 1);
}

void write_audit(std::ostream& out, const AugmentResult& result) {
  const auto sub = [](const std::optional<Scored>& s) {
    return s ? fmt::format("{}\t{:.6f}", s->item, s->score) : std::string("-\t-");
  };
  for (const auto& a : result.audit) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", a.source.first,
                       a.source.second, a.source_count, a.synthetic.first,
                       a.synthetic.second, sub(a.substitute_a), sub(a.substitute_b),
                       a.count, to_string(a.provenance));
  }
  const double ratio = result.real_mass ? static_cast<double>(result.synthetic_mass) /
                                              static_cast<double>(result.real_mass)
                                        : 0.0;
  out << fmt::format("# real_mass={} synthetic_mass={} ratio={:.6f}\n",
                     result.real_mass, result.synthetic_mass, ratio);
}

RecommendationList query_with_ia(const ItemId& target, const DualEmbedding& model,
                                 const SimilarityProvider& similarity,
                                 std::size_t k, const VectorIndex& out_index,
                                 const QueryOptions& options) {
  if (model.contains(target)) {
    return query(model, target, Variant::kInOut, k, out_index, options);
  }
  if (!similarity.knows(target)) throw OutOfCoverage(target);
  const auto proxy = similarity.best_match(
      target, [&](const ItemId& item) { return model.contains(item); });
  if (!proxy) throw OutOfCoverage(target);
  RecommendationList list =
      query(model, proxy->item, Variant::kInOut, k, out_index, options);
  list.target = target;
  list.proxy = proxy->item;
  return list;
}

}  // namespace dualrec

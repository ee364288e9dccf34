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

#include "dualrec/eval.hpp"

#include <algorithm>
#include <exception>
#include <memory>
#include <numeric>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dualrec/kernels.hpp"

namespace dualrec {

std::vector<ItemId> GroundTruth::queries() const {
  std::vector<ItemId> out;
  out.reserve(lists.size());
  for (const auto& [q, _] : lists) out.push_back(q);
  return out;
}

GroundTruth GroundTruth::subset(std::span<const ItemId> queries) const {
  GroundTruth out;
  for (const auto& q : queries) {
    const auto it = lists.find(q);
    if (it != lists.end()) out.lists.emplace(q, it->second);
  }
  return out;
}

namespace {

GroundTruth rank_partners(const std::vector<const PairRecord*>& pairs) {
  std::map<ItemId, std::vector<std::pair<std::uint64_t, ItemId>>> partners;
  for (const auto* p : pairs) {
    partners[p->item_a].emplace_back(p->count, p->item_b);
    partners[p->item_b].emplace_back(p->count, p->item_a);
  }
  GroundTruth truth;
  for (auto& [q, list] : partners) {
    std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    auto& ranked = truth.lists[q];
    for (auto& [_, item] : list) ranked.push_back(std::move(item));
  }
  return truth;
}

}  // namespace

GroundTruth ground_truth_from_pairs(const PairDataset& pairs) {
  std::vector<const PairRecord*> all;
  for (const auto& r : pairs.records()) all.push_back(&r);
  return rank_partners(all);
}

GroundTruth build_ground_truth(std::span<const Session> test_sessions,
                               const GroundTruthOptions& options) {
  if (test_sessions.empty()) throw Error("evaluation error: empty test set");
  const auto built = build_pairs(test_sessions);
  std::vector<const PairRecord*> kept;
  for (const auto& r : built.pairs.records()) {
    if (r.count < options.min_pair_count) continue;
    if (options.min_pmi && r.pmi < *options.min_pmi) continue;
    kept.push_back(&r);
  }
  if (kept.empty()) throw Error("evaluation error: no test pairs remain");
  return rank_partners(kept);
}

HitCount precision_recall_at_k(std::span<const ItemId> truth,
                               std::span<const ItemId> ranked, std::size_t k) {
  if (k == 0) throw DomainError("K must be >= 1");
  const std::unordered_set<std::string_view> relevant(truth.begin(), truth.end());
  HitCount out;
  out.k = k;
  out.truth_size = relevant.size();
  std::unordered_set<std::string_view> seen;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.contains(ranked[i]) && seen.insert(ranked[i]).second) ++out.hits;
  }
  return out;
}

const EvalRow* EvalReport::find(const std::string& model, const std::string& split,
                                std::size_t k) const {
  for (const auto& r : rows) {
    if (r.model == model && r.split == split && r.k == k) return &r;
  }
  return nullptr;
}

void EvalReport::append(const EvalReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string EvalReport::to_table() const {
  const auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("-");
  };
  std::string out = fmt::format("{:<16} {:<26} {:>4} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8}\n",
                                "model", "split", "K", "precision", "recall",
                                "prod_cov", "taxo_cov", "queries", "ooc");
  for (const auto& r : rows) {
    out += fmt::format("{:<16} {:<26} {:>4} {:>9.4f} {:>9.4f} {:>9} {:>9} {:>8} {:>8}\n",
                       r.model, r.split, r.k, r.precision, r.recall,
                       opt(r.product_coverage), opt(r.taxonomy_coverage), r.queries,
                       r.out_of_coverage);
  }
  return out;
}

std::string EvalReport::to_jsonl() const {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::json j;
    j["model"] = r.model;
    j["split"] = r.split;
    j["K"] = r.k;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["product_coverage"] = r.product_coverage ? nlohmann::json(*r.product_coverage)
                                               : nlohmann::json(nullptr);
    j["taxonomy_coverage"] = r.taxonomy_coverage
                                 ? nlohmann::json(*r.taxonomy_coverage)
                                 : nlohmann::json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

struct QueryOutcome {
  bool covered = false;
  std::vector<ItemId> ranked;
};

// Runs the recommender on every query in order. Exceptions other than
// OutOfCoverage are rethrown after the parallel region.
std::vector<QueryOutcome> run_queries(const Recommender& recommender,
                                      const std::vector<ItemId>& queries,
                                      std::size_t k, int threads) {
  std::vector<QueryOutcome> out(queries.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(queries.size());
  const int workers = kernels::resolve_threads(threads);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& o = out[static_cast<std::size_t>(i)];
    try {
      auto list = recommender(queries[static_cast<std::size_t>(i)], k);
      o.covered = true;
      o.ranked.reserve(list.entries.size());
      for (auto& e : list.entries) o.ranked.push_back(std::move(e.item));
    } catch (const OutOfCoverage&) {
      o.covered = false;
    } catch (...) {
#pragma omp critical(dualrec_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

EvalReport evaluate(const Recommender& recommender, const GroundTruth& truth,
                    const EvalOptions& options) {
  if (options.ks.empty()) throw ConfigError("no cutoffs K given");
  for (auto k : options.ks) {
    if (k == 0) throw ConfigError("K must be >= 1");
  }
  const auto queries = truth.queries();
  const std::size_t max_k = *std::max_element(options.ks.begin(), options.ks.end());
  const auto outcomes = run_queries(recommender, queries, max_k, options.threads);

  std::size_t ooc = 0;
  for (const auto& o : outcomes) ooc += o.covered ? 0 : 1;

  EvalReport report;
  for (auto k : options.ks) {
    double p_sum = 0.0;
    double r_sum = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (!outcomes[i].covered) continue;
      const auto h = precision_recall_at_k(truth.lists.at(queries[i]),
                                           outcomes[i].ranked, k);
      p_sum += h.precision();
      r_sum += h.recall();
    }
    EvalRow row;
    row.model = options.model_name;
    row.split = options.split;
    row.k = k;
    const auto n = static_cast<double>(queries.size());
    row.precision = queries.empty() ? 0.0 : p_sum / n;
    row.recall = queries.empty() ? 0.0 : r_sum / n;
    row.queries = queries.size();
    row.out_of_coverage = ooc;
    report.rows.push_back(std::move(row));
  }
  return report;
}

CoverageSplit split_coverage(const GroundTruth& truth,
                             const std::function<bool(const ItemId&)>& in_vocab) {
  CoverageSplit out;
  for (const auto& [q, _] : truth.lists) {
    (in_vocab(q) ? out.in_coverage : out.out_of_coverage).push_back(q);
  }
  return out;
}

CoverageReport coverage_report(const Recommender& recommender,
                               const Catalog& catalog, const GroundTruth& truth,
                               int threads) {
  const auto queries = truth.queries();
  const auto outcomes = run_queries(recommender, queries, 1, threads);
  CoverageReport out;
  std::set<std::string> covered_taxonomies;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (!outcomes[i].covered || outcomes[i].ranked.empty()) continue;
    ++out.covered_queries;
    if (const auto* t = catalog.taxonomy_of(queries[i])) covered_taxonomies.insert(*t);
  }
  out.covered_taxonomies = covered_taxonomies.size();
  if (!queries.empty()) {
    out.product_coverage = static_cast<double>(out.covered_queries) /
                           static_cast<double>(queries.size());
  }
  const auto all = catalog.taxonomies().size();
  if (all > 0) {
    out.taxonomy_coverage = static_cast<double>(out.covered_taxonomies) /
                            static_cast<double>(all);
  }
  return out;
}

std::vector<std::string> map_to_taxonomies(std::span<const ItemId> items,
                                           const Catalog& catalog,
                                           std::size_t* unmapped) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    const auto* t = catalog.taxonomy_of(item);
    if (!t) {
      if (unmapped) ++*unmapped;
      continue;
    }
    if (seen.insert(*t).second) out.push_back(*t);
  }
  return out;
}

EvalReport taxonomy_eval(const Recommender& recommender, const GroundTruth& truth,
                         const Catalog& catalog, const TaxonomyEvalOptions& options) {
  if (options.ks.empty()) throw ConfigError("no cutoffs K given");
  const auto queries = truth.queries();
  const auto outcomes = run_queries(recommender, queries, options.fetch, options.threads);

  std::size_t unmapped = 0;
  std::size_t ooc = 0;
  std::vector<std::vector<std::string>> truth_tax(queries.size());
  std::vector<std::vector<std::string>> ranked_tax(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    truth_tax[i] = map_to_taxonomies(truth.lists.at(queries[i]), catalog, &unmapped);
    if (outcomes[i].covered) {
      ranked_tax[i] = map_to_taxonomies(outcomes[i].ranked, catalog, &unmapped);
    } else {
      ++ooc;
    }
  }
  if (unmapped > 0) {
    spdlog::warn("taxonomy evaluation skipped {} items missing from the catalog",
                 unmapped);
  }

  EvalReport report;
  for (auto k : options.ks) {
    double p_sum = 0.0;
    double r_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (truth_tax[i].empty()) continue;  // nothing to predict
      ++n;
      if (!outcomes[i].covered) continue;
      const auto h = precision_recall_at_k(truth_tax[i], ranked_tax[i], k);
      p_sum += h.precision();
      r_sum += h.recall();
    }
    EvalRow row;
    row.model = options.model_name;
    row.split = "taxonomy";
    row.k = k;
    row.precision = n ? p_sum / static_cast<double>(n) : 0.0;
    row.recall = n ? r_sum / static_cast<double>(n) : 0.0;
    row.queries = n;
    row.out_of_coverage = ooc;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kTopSellers:
      return "top_sellers";
    case BaselineKind::kCoPurchases:
      return "co_purchases";
    case BaselineKind::kRandom:
      return "random";
  }
  return "random";
}

BaselineKind parse_baseline(std::string_view text) {
  if (text == "top_sellers") return BaselineKind::kTopSellers;
  if (text == "co_purchases") return BaselineKind::kCoPurchases;
  if (text == "random") return BaselineKind::kRandom;
  throw ConfigError(fmt::format("unknown baseline '{}'", text));
}

namespace {

// FNV-1a; std::hash is not stable across library implementations.
std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Recommender top_sellers(const BaselineData& data) {
  std::vector<std::pair<std::uint64_t, ItemId>> ranked;
  for (const auto& [item, sales] : data.item_sales) ranked.emplace_back(sales, item);
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  const double top = ranked.empty() ? 1.0 : static_cast<double>(ranked.front().first);
  auto list = std::make_shared<std::vector<Scored>>();
  for (const auto& [sales, item] : ranked) {
    list->push_back({item, top > 0 ? static_cast<double>(sales) / top : 0.0});
  }
  return [list](const ItemId& target, std::size_t k) {
    RecommendationList out;
    out.target = target;
    for (const auto& s : *list) {
      if (out.entries.size() == k) break;
      if (s.item != target) out.entries.push_back(s);
    }
    return out;
  };
}

Recommender co_purchases(const BaselineData& data) {
  const auto truth = std::make_shared<GroundTruth>(ground_truth_from_pairs(data.pairs));
  return [truth](const ItemId& target, std::size_t k) {
    const auto it = truth->lists.find(target);
    if (it == truth->lists.end()) throw OutOfCoverage(target);
    RecommendationList out;
    out.target = target;
    const std::size_t n = std::min(k, it->second.size());
    for (std::size_t i = 0; i < n; ++i) {
      // Rank-derived score keeps the list strictly ordered.
      out.entries.push_back({it->second[i], 1.0 - static_cast<double>(i) /
                                                    static_cast<double>(it->second.size())});
    }
    return out;
  };
}

Recommender random_items(const BaselineData& data, std::uint64_t seed) {
  auto vocab = std::make_shared<std::vector<ItemId>>();
  for (const auto& [item, _] : data.item_sales) vocab->push_back(item);
  std::sort(vocab->begin(), vocab->end());
  return [vocab, seed](const ItemId& target, std::size_t k) {
    Rng rng(seed ^ stable_hash(target));
    std::vector<std::uint32_t> order(vocab->size());
    std::iota(order.begin(), order.end(), 0u);
    RecommendationList out;
    out.target = target;
    // Partial Fisher-Yates until k non-target items are drawn.
    for (std::size_t i = 0; i < order.size() && out.entries.size() < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
      const auto& item = (*vocab)[order[i]];
      if (item == target) continue;
      out.entries.push_back({item, 0.0});
    }
    return out;
  };
}

}  // namespace

Recommender make_baseline(BaselineKind kind, BaselineData data, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::kTopSellers:
      return top_sellers(data);
    case BaselineKind::kCoPurchases:
      return co_purchases(data);
    case BaselineKind::kRandom:
      return random_items(data, seed);
  }
  throw ConfigError("unknown baseline");
}

Recommender make_retrieval_recommender(const DualEmbedding& model,
                                       const VectorIndex& index, Variant variant,
                                       QueryOptions options) {
  return [&model, &index, variant, options](const ItemId& target, std::size_t k) {
    return query(model, target, variant, k, index, options);
  };
}

}  // namespace dualrec

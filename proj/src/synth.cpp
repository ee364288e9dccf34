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

#include "dualrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "dualrec/kernels.hpp"
#include "dualrec/sgns.hpp"

namespace dualrec {

void WorldConfig::validate() const {
  if (n_categories < 2) throw ConfigError("n_categories must be >= 2");
  if (items_per_category < 2) throw ConfigError("items_per_category must be >= 2");
  if (n_categories > 1000 || items_per_category > 1000) {
    throw ConfigError("at most 1000 categories and 1000 items per category");
  }
  if (complement_graph.empty() && complements_per_category < 1) {
    throw ConfigError("empty complement graph");
  }
  for (const auto& e : complement_graph) {
    if (e.from < 0 || e.from >= n_categories || e.to < 0 || e.to >= n_categories) {
      throw ConfigError("complement edge references an unknown category");
    }
    if (e.from == e.to) throw ConfigError("complement graph has a self loop");
    if (!(e.affinity > 0.0)) throw ConfigError("edge affinity must be positive");
  }
  if (popularity_skew < 0.0 || click_skew < 0.0) {
    throw ConfigError("Zipf exponents must be >= 0");
  }
  if (basket_min < 2 || basket_max < basket_min) {
    throw ConfigError("basket sizes must satisfy 2 <= min <= max");
  }
  if (basket_extra_mean < 0.0) throw ConfigError("basket_extra_mean must be >= 0");
  for (double p : {same_category_rate, noise_rate, click_switch_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("rates must lie in [0, 1]");
  }
  if (!(holdout_item_fraction >= 0.0 && holdout_item_fraction < 1.0)) {
    throw ConfigError("holdout_item_fraction must lie in [0, 1)");
  }
  if (click_length_mean < 2.0 || click_length_max < 2) {
    throw ConfigError("click sessions need at least two items");
  }
  if (sessions_per_user == 0) throw ConfigError("sessions_per_user must be >= 1");
}

bool World::adjacent(int a, int b) const {
  const auto& row = adjacency[static_cast<std::size_t>(a)];
  return std::any_of(row.begin(), row.end(), [b](const auto& e) { return e.first == b; });
}

ItemId synth_item_id(int category, int item) {
  return fmt::format("c{:02d}_i{:03d}", category, item);
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void add_edge(World& w, int a, int b, double affinity) {
  if (a == b || w.adjacent(a, b)) return;
  w.adjacency[static_cast<std::size_t>(a)].emplace_back(b, affinity);
  w.adjacency[static_cast<std::size_t>(b)].emplace_back(a, affinity);
}

void random_graph(World& w, const WorldConfig& cfg, Rng& rng) {
  const int n = cfg.n_categories;
  const int degree = std::min(cfg.complements_per_category, n - 1);
  std::uniform_real_distribution<double> affinity(0.5, 1.5);
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int c = 0; c < n; ++c) {
    for (int tries = 0;
         static_cast<int>(w.adjacency[static_cast<std::size_t>(c)].size()) < degree &&
         tries < 50 * n;
         ++tries) {
      const int d = any(rng);
      if (d == c || w.adjacent(c, d)) continue;
      // Prefer partners that still lack edges; late categories may overshoot.
      if (static_cast<int>(w.adjacency[static_cast<std::size_t>(d)].size()) >= degree &&
          tries < 10 * n) {
        continue;
      }
      add_edge(w, c, d, affinity(rng));
    }
  }
}

}  // namespace

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World w;
  w.config = cfg;
  const auto n = static_cast<std::size_t>(cfg.n_categories);
  w.adjacency.resize(n);
  w.items_by_category.resize(n);
  Rng rng(splitmix(cfg.seed));

  if (cfg.complement_graph.empty()) {
    random_graph(w, cfg, rng);
  } else {
    for (const auto& e : cfg.complement_graph) add_edge(w, e.from, e.to, e.affinity);
  }
  for (auto& row : w.adjacency) std::sort(row.begin(), row.end());
  if (std::all_of(w.adjacency.begin(), w.adjacency.end(),
                  [](const auto& row) { return row.empty(); })) {
    throw ConfigError("empty complement graph");
  }

  for (int c = 0; c < cfg.n_categories; ++c) {
    for (int i = 0; i < cfg.items_per_category; ++i) {
      const auto id = synth_item_id(c, i);
      w.items_by_category[static_cast<std::size_t>(c)].push_back(id);
      w.catalog.add(CatalogEntry{id,
                                 {fmt::format("dept{}", c / 5), fmt::format("cat{:02d}", c)},
                                 fmt::format("item {} of category {}", i, c)});
      w.truth.category[id] = c;
    }
  }
  for (int c = 0; c < cfg.n_categories; ++c) {
    std::vector<ItemId> complements;
    for (const auto& [d, _] : w.adjacency[static_cast<std::size_t>(c)]) {
      const auto& items = w.items_by_category[static_cast<std::size_t>(d)];
      complements.insert(complements.end(), items.begin(), items.end());
    }
    std::sort(complements.begin(), complements.end());
    for (const auto& id : w.items_by_category[static_cast<std::size_t>(c)]) {
      w.truth.complements[id] = complements;
    }
  }

  const auto per_category = static_cast<std::size_t>(
      std::llround(cfg.holdout_item_fraction * cfg.items_per_category));
  for (auto& items : w.items_by_category) {
    std::vector<ItemId> shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i < per_category && i + 1 < shuffled.size(); ++i) {
      w.holdout.insert(shuffled[i]);
    }
  }
  return w;
}

namespace {

// Zipf sampler over one category; popularity ranks come from a seeded
// permutation so that rank does not follow the item id.
struct CategorySampler {
  std::vector<const ItemId*> items;
  std::vector<double> cumulative;

  const ItemId& draw(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, cumulative.back())(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                         items.size() - 1);
    return *items[i];
  }
};

std::vector<CategorySampler> make_samplers(const World& w, double skew,
                                           bool exclude_holdout, std::uint64_t seed) {
  std::vector<CategorySampler> out;
  Rng rng(splitmix(seed ^ 0x5a5a5a5aULL));
  for (const auto& items : w.items_by_category) {
    std::vector<std::size_t> rank(items.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::shuffle(rank.begin(), rank.end(), rng);
    CategorySampler s;
    double total = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (exclude_holdout && w.holdout.contains(items[i])) continue;
      s.items.push_back(&items[i]);
      total += 1.0 / std::pow(static_cast<double>(rank[i] + 1), skew);
      s.cumulative.push_back(total);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct Stream {
  std::uint64_t id;
  std::string prefix;
  Channel channel;
};

constexpr std::size_t kBatch = 1024;

template <typename MakeItems>
std::vector<Session> generate_stream(std::size_t count, const Stream& stream,
                                     std::uint64_t seed, std::size_t per_user,
                                     int threads, MakeItems make_items) {
  std::vector<Session> out(count);
  const auto batches = static_cast<std::int64_t>((count + kBatch - 1) / kBatch);
  const int workers = kernels::resolve_threads(threads);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (std::int64_t b = 0; b < batches; ++b) {
    Rng rng(splitmix(seed ^ splitmix(stream.id * 1000003ULL + static_cast<std::uint64_t>(b))));
    const std::size_t begin = static_cast<std::size_t>(b) * kBatch;
    const std::size_t end = std::min(count, begin + kBatch);
    for (std::size_t i = begin; i < end; ++i) {
      auto& s = out[i];
      s.user_id = fmt::format("{}u{:06d}", stream.prefix, i / per_user);
      s.session_id = fmt::format("{}s{:07d}", stream.prefix, i);
      s.channel = stream.channel;
      s.items = make_items(rng);
    }
  }
  return out;
}

std::vector<ItemId> basket(const World& w, const WorldConfig& cfg,
                           const std::vector<CategorySampler>& samplers,
                           const std::vector<const ItemId*>& all_items, Rng& rng) {
  std::vector<ItemId> items;
  std::bernoulli_distribution noise(cfg.noise_rate);
  if (noise(rng)) {
    std::uniform_int_distribution<std::size_t> any(0, all_items.size() - 1);
    items.push_back(*all_items[any(rng)]);
    while (items.size() < 2) {
      const auto& next = *all_items[any(rng)];
      if (next != items.front()) items.push_back(next);
    }
    return items;
  }

  std::poisson_distribution<int> extra(cfg.basket_extra_mean);
  const auto size = static_cast<std::size_t>(
      std::min(cfg.basket_max, cfg.basket_min + extra(rng)));
  const int n = cfg.n_categories;
  const int anchor = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::vector<int> chosen{anchor};
  items.push_back(samplers[static_cast<std::size_t>(anchor)].draw(rng));
  std::bernoulli_distribution repeat(cfg.same_category_rate);

  for (std::size_t attempt = 0; items.size() < size && attempt < 8 * size; ++attempt) {
    int category;
    if (items.size() > 1 && repeat(rng)) {
      category = chosen[std::uniform_int_distribution<std::size_t>(0, chosen.size() - 1)(rng)];
    } else {
      // New categories must be adjacent to every category already present.
      std::vector<int> fresh;
      std::vector<double> weight;
      for (const auto& [d, aff] : w.adjacency[static_cast<std::size_t>(anchor)]) {
        if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) continue;
        double total = 0.0;
        bool ok = true;
        for (int c : chosen) {
          const auto& row = w.adjacency[static_cast<std::size_t>(c)];
          const auto it = std::find_if(row.begin(), row.end(),
                                       [d](const auto& e) { return e.first == d; });
          if (it == row.end()) {
            ok = false;
            break;
          }
          total += it->second;
        }
        if (ok) {
          fresh.push_back(d);
          weight.push_back(total);
        }
      }
      if (fresh.empty()) break;
      std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
      category = fresh[pick(rng)];
      chosen.push_back(category);
    }
    const auto& item = samplers[static_cast<std::size_t>(category)].draw(rng);
    if (std::find(items.begin(), items.end(), item) == items.end()) items.push_back(item);
  }
  return items;
}

std::vector<ItemId> browse(const WorldConfig& cfg,
                           const std::vector<CategorySampler>& samplers,
                           Rng& rng) {
  std::poisson_distribution<int> extra(cfg.click_length_mean - 2.0);
  const auto length =
      static_cast<std::size_t>(std::min(cfg.click_length_max, 2 + extra(rng)));
  std::uniform_int_distribution<int> any(0, cfg.n_categories - 1);
  std::bernoulli_distribution jump(cfg.click_switch_rate);
  int category = any(rng);
  std::vector<ItemId> items;
  for (std::size_t attempt = 0; items.size() < length && attempt < 8 * length; ++attempt) {
    if (!items.empty() && jump(rng)) category = any(rng);
    const auto& item = samplers[static_cast<std::size_t>(category)].draw(rng);
    if (items.empty() || items.back() != item) items.push_back(item);
  }
  return items;
}

}  // namespace

GeneratedSessions generate_sessions(const World& world, const WorldConfig& cfg,
                                    int threads) {
  cfg.validate();
  GeneratedSessions out;

  const auto train_samplers = make_samplers(world, cfg.popularity_skew, true, cfg.seed);
  const auto test_samplers = make_samplers(world, cfg.popularity_skew, false, cfg.seed);
  const auto click_samplers = make_samplers(world, cfg.click_skew, false, cfg.seed);
  std::vector<const ItemId*> train_items;
  std::vector<const ItemId*> all_items;
  for (const auto& items : world.items_by_category) {
    for (const auto& id : items) {
      all_items.push_back(&id);
      if (!world.holdout.contains(id)) train_items.push_back(&id);
    }
  }

  out.purchases = generate_stream(
      cfg.n_purchase_sessions, {1, "p", Channel::kPurchase}, cfg.seed,
      cfg.sessions_per_user, threads,
      [&](Rng& rng) { return basket(world, cfg, train_samplers, train_items, rng); });
  out.clicks = generate_stream(
      cfg.n_click_sessions, {2, "k", Channel::kClick}, cfg.seed, cfg.sessions_per_user,
      threads, [&](Rng& rng) { return browse(cfg, click_samplers, rng); });
  out.test_purchases = generate_stream(
      cfg.n_test_sessions, {3, "t", Channel::kPurchase}, cfg.seed,
      cfg.sessions_per_user, threads,
      [&](Rng& rng) { return basket(world, cfg, test_samplers, all_items, rng); });
  return out;
}

void write_truth(std::ostream& out, const WorldTruth& truth) {
  for (const auto& [item, complements] : truth.complements) {
    for (const auto& c : complements) out << item << '\t' << c << '\n';
  }
}

GroundTruth truth_ground_truth(const WorldTruth& truth) {
  GroundTruth out;
  for (const auto& [item, complements] : truth.complements) {
    if (!complements.empty()) out.lists.emplace(item, complements);
  }
  return out;
}

PairConsistency measure_consistency(const World& world,
                                    std::span<const Session> sessions) {
  PairConsistency out;
  for (const auto& s : sessions) {
    const auto items = s.distinct_items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        const auto a = world.truth.category.find(items[i]);
        const auto b = world.truth.category.find(items[j]);
        if (a == world.truth.category.end() || b == world.truth.category.end() ||
            a->second == b->second) {
          continue;
        }
        ++out.cross_category;
        if (world.adjacent(a->second, b->second)) ++out.on_graph;
      }
    }
  }
  return out;
}

}  // namespace dualrec

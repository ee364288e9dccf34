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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "dualrec/synth.hpp"

namespace dualrec {
namespace {

WorldConfig small_config() {
  WorldConfig cfg;
  cfg.n_categories = 20;
  cfg.items_per_category = 10;
  cfg.n_purchase_sessions = 3000;
  cfg.n_click_sessions = 1000;
  cfg.n_test_sessions = 500;
  cfg.seed = 5;
  return cfg;
}

std::string dump(const std::vector<Session>& sessions) {
  std::ostringstream out;
  write_sessions(out, sessions);
  return out.str();
}

TEST(SynthWorld, CatalogSize) {
  const auto w = generate_world(small_config());
  EXPECT_EQ(w.catalog.size(), 200u);
  EXPECT_EQ(w.catalog.taxonomies().size(), 20u);
  EXPECT_EQ(synth_item_id(7, 23), "c07_i023");
  EXPECT_EQ(w.catalog.find("c07_i003")->taxonomy, (std::vector<std::string>{"dept1", "cat07"}));
}

TEST(SynthWorld, TruthExcludesSameCategoryAndFollowsGraph) {
  const auto w = generate_world(small_config());
  for (const auto& [item, complements] : w.truth.complements) {
    const int c = w.truth.category.at(item);
    EXPECT_TRUE(std::is_sorted(complements.begin(), complements.end()));
    std::set<int> cats;
    for (const auto& other : complements) {
      const int d = w.truth.category.at(other);
      EXPECT_NE(d, c);
      EXPECT_TRUE(w.adjacent(c, d));
      cats.insert(d);
    }
    EXPECT_EQ(cats.size(), w.adjacency[static_cast<std::size_t>(c)].size());
  }
  for (std::size_t c = 0; c < w.adjacency.size(); ++c) {
    for (const auto& [d, aff] : w.adjacency[c]) {
      EXPECT_NE(static_cast<std::size_t>(d), c);
      EXPECT_GT(aff, 0.0);
      EXPECT_TRUE(w.adjacent(d, static_cast<int>(c)));
    }
  }
}

TEST(SynthWorld, SeedDeterminism) {
  const auto a = generate_world(small_config());
  const auto b = generate_world(small_config());
  EXPECT_EQ(a.adjacency, b.adjacency);
  EXPECT_EQ(a.truth.complements, b.truth.complements);
  auto cfg = small_config();
  cfg.seed = 6;
  EXPECT_NE(generate_world(cfg).adjacency, a.adjacency);
}

TEST(SynthWorld, ExplicitGraph) {
  auto cfg = small_config();
  cfg.n_categories = 3;
  cfg.complement_graph = {{0, 1, 1.0}, {1, 2, 2.0}};
  const auto w = generate_world(cfg);
  EXPECT_TRUE(w.adjacent(0, 1));
  EXPECT_TRUE(w.adjacent(2, 1));
  EXPECT_FALSE(w.adjacent(0, 2));
  cfg.complement_graph = {{0, 0, 1.0}};
  EXPECT_THROW(generate_world(cfg), ConfigError);
  cfg.complement_graph = {{0, 5, 1.0}};
  EXPECT_THROW(generate_world(cfg), ConfigError);
}

TEST(SynthSessions, DeterministicAcrossThreadCounts) {
  const auto cfg = small_config();
  const auto w = generate_world(cfg);
  const auto a = generate_sessions(w, cfg, 1);
  const auto b = generate_sessions(w, cfg, 4);
  EXPECT_EQ(dump(a.purchases), dump(b.purchases));
  EXPECT_EQ(dump(a.clicks), dump(b.clicks));
  EXPECT_EQ(dump(a.test_purchases), dump(b.test_purchases));
  EXPECT_EQ(a.purchases.size(), cfg.n_purchase_sessions);
  EXPECT_EQ(a.clicks.size(), cfg.n_click_sessions);
  for (const auto& s : a.clicks) EXPECT_EQ(s.channel, Channel::kClick);
  for (const auto& s : a.purchases) {
    EXPECT_GE(s.distinct_items().size(), 2u);
    EXPECT_LE(s.items.size(), static_cast<std::size_t>(cfg.basket_max));
  }
}

TEST(SynthSessions, ZeroNoiseIsGraphConsistent) {
  auto cfg = small_config();
  cfg.noise_rate = 0.0;
  const auto w = generate_world(cfg);
  const auto gen = generate_sessions(w, cfg);
  const auto c = measure_consistency(w, gen.purchases);
  EXPECT_GT(c.cross_category, 0u);
  EXPECT_EQ(c.on_graph, c.cross_category);
}

TEST(SynthSessions, HoldoutChannelSeparation) {
  auto cfg = small_config();
  cfg.holdout_item_fraction = 0.3;
  const auto w = generate_world(cfg);
  EXPECT_EQ(w.holdout.size(), 20u * 3u);
  const auto gen = generate_sessions(w, cfg);
  std::set<ItemId> clicked, tested;
  for (const auto& s : gen.purchases) {
    for (const auto& i : s.items) EXPECT_FALSE(w.holdout.contains(i)) << i;
  }
  for (const auto& s : gen.clicks) clicked.insert(s.items.begin(), s.items.end());
  for (const auto& s : gen.test_purchases) tested.insert(s.items.begin(), s.items.end());
  std::size_t clicked_holdout = 0, tested_holdout = 0;
  for (const auto& h : w.holdout) {
    clicked_holdout += clicked.contains(h);
    tested_holdout += tested.contains(h);
  }
  EXPECT_EQ(clicked_holdout, w.holdout.size());
  EXPECT_GT(tested_holdout, 0u);
}

TEST(SynthSessions, DefaultConsistencyAtLeast95Percent) {
  const WorldConfig cfg;
  const auto w = generate_world(cfg);
  const auto gen = generate_sessions(w, cfg, 0);
  EXPECT_GE(measure_consistency(w, gen.purchases).fraction(), 0.95);
}

TEST(SynthTruth, WriterAndGroundTruth) {
  auto cfg = small_config();
  cfg.n_categories = 2;
  cfg.items_per_category = 2;
  cfg.complement_graph = {{0, 1, 1.0}};
  const auto w = generate_world(cfg);
  std::ostringstream out;
  write_truth(out, w.truth);
  EXPECT_EQ(out.str(),
            "c00_i000\tc01_i000\nc00_i000\tc01_i001\nc00_i001\tc01_i000\nc00_i001\tc01_i001\n"
            "c01_i000\tc00_i000\nc01_i000\tc00_i001\nc01_i001\tc00_i000\nc01_i001\tc00_i001\n");
  const auto gt = truth_ground_truth(w.truth);
  EXPECT_EQ(gt.size(), 4u);
  EXPECT_EQ(gt.lists.at("c00_i000"), (std::vector<ItemId>{"c01_i000", "c01_i001"}));
}

TEST(WorldConfig, Validation) {
  WorldConfig cfg;
  cfg.n_categories = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = WorldConfig{};
  cfg.noise_rate = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = WorldConfig{};
  cfg.holdout_item_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace dualrec

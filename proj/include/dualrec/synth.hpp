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

// Synthetic shopping worlds with a known complement graph.
//
// Items belong to categories. Purchase baskets mix categories joined by
// graph edges; click sessions browse mostly within one category. Holdout
// items never occur in training purchases, only in clicks and in the test
// purchases, which makes them genuinely cold.

#ifndef DUALREC_SYNTH_HPP_
#define DUALREC_SYNTH_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "dualrec/corpus.hpp"
#include "dualrec/eval.hpp"

namespace dualrec {

struct CategoryEdge {
  int from = 0;
  int to = 0;
  double affinity = 1.0;
};

struct WorldConfig {
  int n_categories = 20;
  int items_per_category = 50;
  /// Explicit graph; when empty a random symmetric graph is drawn with
  /// about `complements_per_category` partners per category.
  std::vector<CategoryEdge> complement_graph;
  int complements_per_category = 3;
  double popularity_skew = 1.0;  // Zipf exponent within a category
  std::size_t n_purchase_sessions = 50000;
  std::size_t n_click_sessions = 20000;
  std::size_t n_test_sessions = 10000;
  int basket_min = 2;
  double basket_extra_mean = 1.5;  // Poisson
  int basket_max = 8;
  /// Chance that an extra basket item repeats a category already present.
  /// Otherwise it opens a category adjacent to all present ones; the basket
  /// ends early when none is left.
  double same_category_rate = 0.1;
  double noise_rate = 0.05;        // whole session of two random items
  double holdout_item_fraction = 0.0;
  double click_skew = 0.5;
  double click_switch_rate = 0.1;
  double click_length_mean = 4.0;  // 2 + Poisson(mean - 2)
  int click_length_max = 12;
  std::size_t sessions_per_user = 4;
  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError
};

/// Ground truth: the complements of an item are all items of the
/// categories adjacent to its own.
struct WorldTruth {
  std::map<ItemId, int> category;
  std::map<ItemId, std::vector<ItemId>> complements;  // sorted
};

struct World {
  WorldConfig config;
  Catalog catalog;
  WorldTruth truth;
  /// adjacency[c] = (neighbour, affinity), symmetric, no self loops.
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  std::vector<std::vector<ItemId>> items_by_category;
  std::set<ItemId> holdout;

  bool adjacent(int a, int b) const;
};

/// "c07_i023" for category 7, item 23.
ItemId synth_item_id(int category, int item);

/// Throws ConfigError for an invalid config or an empty graph.
World generate_world(const WorldConfig& cfg);

struct GeneratedSessions {
  std::vector<Session> purchases;       // training; holdout items excluded
  std::vector<Session> clicks;          // click channel, all items
  std::vector<Session> test_purchases;  // all items
};

/// Deterministic for a given world and config, independent of the thread
/// count (sessions are generated in fixed batches with per-batch seeds).
GeneratedSessions generate_sessions(const World& world, const WorldConfig& cfg,
                                    int threads = 1);

/// `item_id \t complement_item_id`, sorted.
void write_truth(std::ostream& out, const WorldTruth& truth);

/// The truth as an evaluation ground truth (lists in ascending id order).
GroundTruth truth_ground_truth(const WorldTruth& truth);

struct PairConsistency {
  std::uint64_t cross_category = 0;  // pair occurrences across categories
  std::uint64_t on_graph = 0;
  double fraction() const {
    return cross_category ? static_cast<double>(on_graph) /
                                static_cast<double>(cross_category)
                          : 1.0;
  }
};

/// Counts cross-category pair occurrences of `sessions` lying on graph
/// edges.
PairConsistency measure_consistency(const World& world,
                                    std::span<const Session> sessions);

}  // namespace dualrec

#endif  // DUALREC_SYNTH_HPP_

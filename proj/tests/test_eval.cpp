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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dualrec/eval.hpp"
#include "test_util.hpp"

namespace dualrec {
namespace {

using testing::pair;

RecommendationList listed(const ItemId& target, std::vector<ItemId> items) {
  RecommendationList l;
  l.target = target;
  double s = 1.0;
  for (auto& i : items) {
    l.entries.push_back({std::move(i), s});
    s -= 0.01;
  }
  return l;
}

TEST(GroundTruth, RankingExamples) {
  auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 3), pair("a", "c", 1)}));
  EXPECT_EQ(t.lists.at("a"), (std::vector<ItemId>{"b", "c"}));

  t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1)}));
  EXPECT_EQ(t.queries(), (std::vector<ItemId>{"a", "b"}));
  EXPECT_EQ(t.lists.at("a"), std::vector<ItemId>{"b"});
  EXPECT_EQ(t.lists.at("b"), std::vector<ItemId>{"a"});

  t = ground_truth_from_pairs(testing::pairs({pair("a", "c", 2), pair("a", "b", 2)}));
  EXPECT_EQ(t.lists.at("a"), (std::vector<ItemId>{"b", "c"}));
}

TEST(GroundTruth, FromSessions) {
  std::vector<Session> s{testing::make_session("u", {"a", "b"}),
                         testing::make_session("u", {"a", "b", "c"})};
  const auto t = build_ground_truth(s);
  EXPECT_EQ(t.lists.at("a"), (std::vector<ItemId>{"b", "c"}));
  for (const auto& [q, l] : t.lists) {
    EXPECT_FALSE(l.empty());
    EXPECT_EQ(std::count(l.begin(), l.end(), q), 0);
  }
  GroundTruthOptions opts;
  opts.min_pair_count = 2;
  EXPECT_EQ(build_ground_truth(s, opts).size(), 2u);
  opts.min_pair_count = 3;
  EXPECT_THROW(build_ground_truth(s, opts), Error);
  EXPECT_THROW(build_ground_truth(std::span<const Session>{}), Error);
}

TEST(GroundTruth, Subset) {
  const auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1), pair("c", "d", 1)}));
  const std::vector<ItemId> q{"a", "zz"};
  EXPECT_EQ(t.subset(q).queries(), std::vector<ItemId>{"a"});
}

TEST(PrecisionRecall, Examples) {
  const std::vector<ItemId> truth{"x", "y"};
  auto h = precision_recall_at_k(truth, std::vector<ItemId>{"x", "z"}, 2);
  EXPECT_DOUBLE_EQ(h.precision(), 0.5);
  EXPECT_DOUBLE_EQ(h.recall(), 0.5);
  h = precision_recall_at_k(truth, std::vector<ItemId>{"y", "x"}, 2);
  EXPECT_DOUBLE_EQ(h.precision(), 1.0);
  EXPECT_DOUBLE_EQ(h.recall(), 1.0);
  h = precision_recall_at_k(truth, std::vector<ItemId>{"p", "q"}, 2);
  EXPECT_EQ(h.hits, 0u);
  // Short lists keep the K denominator.
  h = precision_recall_at_k(truth, std::vector<ItemId>{"x"}, 4);
  EXPECT_DOUBLE_EQ(h.precision(), 0.25);
  EXPECT_THROW(precision_recall_at_k(truth, truth, 0), DomainError);
}

TEST(PrecisionRecall, OracleAndIdentity) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int universe = 3 + static_cast<int>(rng() % 20);
    std::vector<ItemId> truth, ranked;
    std::set<ItemId> tset;
    for (int i = 0; i < universe; ++i) {
      if (rng() % 3 == 0) {
        truth.push_back(testing::fmt_item(i));
        tset.insert(truth.back());
      }
    }
    if (truth.empty()) truth.push_back(testing::fmt_item(0)), tset.insert(truth.back());
    std::vector<int> perm(universe);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < universe; ++i) {
      if (rng() % 2) ranked.push_back(testing::fmt_item(perm[i]));
    }
    std::size_t prev_hits = 0;
    for (std::size_t k = 1; k <= 25; ++k) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += tset.count(ranked[i]);
      const auto h = precision_recall_at_k(truth, ranked, k);
      ASSERT_EQ(h.hits, hits);
      EXPECT_EQ(h.truth_size, truth.size());
      EXPECT_DOUBLE_EQ(h.precision() * static_cast<double>(k),
                       h.recall() * static_cast<double>(truth.size()));
      EXPECT_GE(h.hits, prev_hits);
      prev_hits = h.hits;
    }
  }
}

TEST(Evaluate, AlwaysErroringRecommenderScoresZero) {
  const auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1), pair("c", "d", 1)}));
  const Recommender fail = [](const ItemId& q, std::size_t) -> RecommendationList {
    throw OutOfCoverage(q);
  };
  const auto report = evaluate(fail, t, EvalOptions{});
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& r : report.rows) {
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.recall, 0.0);
    EXPECT_EQ(r.out_of_coverage, 4u);
  }
}

TEST(Evaluate, OtherErrorsPropagate) {
  const auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1)}));
  const Recommender bad = [](const ItemId&, std::size_t) -> RecommendationList {
    throw std::runtime_error("boom");
  };
  EXPECT_THROW(evaluate(bad, t, EvalOptions{}), std::runtime_error);
}

TEST(Evaluate, PerfectOracleOnThreeQueries) {
  const auto t = ground_truth_from_pairs(
      testing::pairs({pair("a", "b", 3), pair("a", "c", 2), pair("a", "d", 1)}));
  // Queries a (3 partners), b, c, d (one partner each).
  const Recommender perfect = [&](const ItemId& q, std::size_t k) {
    auto l = t.lists.at(q);
    if (l.size() > k) l.resize(k);
    return listed(q, l);
  };
  EvalOptions opts;
  opts.ks = {1, 2};
  const auto report = evaluate(perfect, t, opts);
  // K=1: every query hits once. K=2: a hits 2 of 3, others 1 of 1.
  EXPECT_DOUBLE_EQ(report.find("model", "combined", 1)->precision, 1.0);
  EXPECT_DOUBLE_EQ(report.find("model", "combined", 1)->recall, (1.0 / 3 + 3.0) / 4);
  EXPECT_DOUBLE_EQ(report.find("model", "combined", 2)->precision, (1.0 + 3 * 0.5) / 4);
  EXPECT_DOUBLE_EQ(report.find("model", "combined", 2)->recall, (2.0 / 3 + 3.0) / 4);
}

TEST(Evaluate, ZeroCountingBoundAndDeterminism) {
  std::vector<PairRecord> recs;
  for (int i = 0; i < 30; ++i) {
    recs.push_back(pair(testing::fmt_item(i).c_str(), testing::fmt_item(i + 100).c_str(), 1));
  }
  const auto t = ground_truth_from_pairs(testing::pairs(recs));
  const auto queries = t.queries();
  // Perfect on even-indexed queries, out of coverage on the rest.
  const Recommender half = [&](const ItemId& q, std::size_t) {
    const auto idx = std::find(queries.begin(), queries.end(), q) - queries.begin();
    if (idx % 2) throw OutOfCoverage(q);
    return listed(q, t.lists.at(q));
  };
  EvalOptions opts;
  opts.threads = 4;
  const auto a = evaluate(half, t, opts);
  const auto b = evaluate(half, t, opts);
  EXPECT_EQ(a.to_jsonl(), b.to_jsonl());
  const double f = static_cast<double>(a.rows[0].out_of_coverage) / a.rows[0].queries;
  EXPECT_LE(a.rows[0].recall, 1.0 - f + 1e-12);
  EXPECT_DOUBLE_EQ(a.rows[0].recall, 0.5);
}

TEST(SplitCoverage, Partitions) {
  const auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1), pair("c", "d", 1)}));
  auto s = split_coverage(t, [](const ItemId&) { return true; });
  EXPECT_TRUE(s.out_of_coverage.empty());
  s = split_coverage(t, [](const ItemId&) { return false; });
  EXPECT_TRUE(s.in_coverage.empty());
  s = split_coverage(t, [](const ItemId& i) { return i == "a" || i == "d"; });
  EXPECT_EQ(s.in_coverage, (std::vector<ItemId>{"a", "d"}));
  EXPECT_EQ(s.out_of_coverage, (std::vector<ItemId>{"b", "c"}));
}

TEST(CoverageReport, TotalAndZero) {
  const auto cat = testing::catalog({{"a", "x"}, {"b", "y"}, {"c", "x"}, {"d", "z"}});
  const auto t = ground_truth_from_pairs(testing::pairs({pair("a", "b", 1), pair("c", "d", 1)}));
  const Recommender total = [](const ItemId& q, std::size_t) { return listed(q, {"zz"}); };
  auto c = coverage_report(total, cat, t);
  EXPECT_DOUBLE_EQ(c.product_coverage, 1.0);
  EXPECT_DOUBLE_EQ(c.taxonomy_coverage, 1.0);
  const Recommender none = [](const ItemId& q, std::size_t) -> RecommendationList {
    throw OutOfCoverage(q);
  };
  c = coverage_report(none, cat, t);
  EXPECT_DOUBLE_EQ(c.product_coverage, 0.0);
  EXPECT_DOUBLE_EQ(c.taxonomy_coverage, 0.0);
  const Recommender only_x = [&](const ItemId& q, std::size_t) {
    if (*cat.taxonomy_of(q) != "x") throw OutOfCoverage(q);
    return listed(q, {"zz"});
  };
  c = coverage_report(only_x, cat, t);
  EXPECT_DOUBLE_EQ(c.product_coverage, 0.5);
  EXPECT_DOUBLE_EQ(c.taxonomy_coverage, 1.0 / 3.0);
}

TEST(MapToTaxonomies, DedupPreservesOrder) {
  const auto cat = testing::catalog({{"a", "x"}, {"b", "y"}, {"c", "x"}});
  std::size_t unmapped = 0;
  const std::vector<ItemId> items{"c", "q", "b", "a"};
  EXPECT_EQ(map_to_taxonomies(items, cat, &unmapped), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(unmapped, 1u);
}

TEST(TaxonomyEval, PerfectWrongAndMixed) {
  const auto cat = testing::catalog(
      {{"q1", "base"}, {"q2", "base"}, {"s1", "sheets"}, {"s2", "sheets"}, {"l1", "lamps"}});
  const auto t = ground_truth_from_pairs(
      testing::pairs({pair("q1", "s1", 2), pair("q1", "l1", 1), pair("q2", "s2", 1)}));
  const GroundTruth only_q = t.subset(std::vector<ItemId>{"q1", "q2"});

  const Recommender right = [](const ItemId& q, std::size_t) { return listed(q, {"s2", "s1"}); };
  const auto r1 = taxonomy_eval(right, only_q, cat, TaxonomyEvalOptions{});
  EXPECT_DOUBLE_EQ(r1.find("model", "taxonomy", 1)->precision, 1.0);

  const Recommender wrong = [](const ItemId& q, std::size_t) { return listed(q, {"q2", "q1"}); };
  const auto r0 = taxonomy_eval(wrong, only_q, cat, TaxonomyEvalOptions{});
  EXPECT_DOUBLE_EQ(r0.find("model", "taxonomy", 1)->precision, 0.0);
  EXPECT_DOUBLE_EQ(r0.find("model", "taxonomy", 3)->recall, 0.0);

  // Mixed: ranked [s1, s2, l1, q2] -> [sheets, lamps, base].
  // q1 truth [sheets, lamps]: K=1 1 hit, K=3 2 hits. q2 truth [sheets]: 1 hit.
  const Recommender mixed = [](const ItemId& q, std::size_t) {
    return listed(q, {"s1", "s2", "l1", "q2"});
  };
  const auto rm = taxonomy_eval(mixed, only_q, cat, TaxonomyEvalOptions{});
  EXPECT_DOUBLE_EQ(rm.find("model", "taxonomy", 1)->precision, 1.0);
  EXPECT_DOUBLE_EQ(rm.find("model", "taxonomy", 1)->recall, (0.5 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(rm.find("model", "taxonomy", 3)->precision, (2.0 / 3 + 1.0 / 3) / 2);
  EXPECT_DOUBLE_EQ(rm.find("model", "taxonomy", 3)->recall, 1.0);
}

TEST(Baselines, TopSellers) {
  BaselineData d;
  d.item_sales = {{"a", 5}, {"b", 3}, {"c", 1}};
  const auto rec = make_baseline(BaselineKind::kTopSellers, d, 1);
  const auto l = rec("d", 2);
  ASSERT_EQ(l.entries.size(), 2u);
  EXPECT_EQ(l.entries[0].item, "a");
  EXPECT_EQ(l.entries[1].item, "b");
  EXPECT_EQ(rec("a", 2).entries[0].item, "b");
}

TEST(Baselines, CoPurchases) {
  BaselineData d;
  d.pairs = testing::pairs({pair("a", "b", 3), pair("a", "c", 1)});
  const auto rec = make_baseline(BaselineKind::kCoPurchases, d, 1);
  const auto l = rec("a", 5);
  ASSERT_EQ(l.entries.size(), 2u);
  EXPECT_EQ(l.entries[0].item, "b");
  EXPECT_EQ(l.entries[1].item, "c");
  EXPECT_EQ(check_recommendations(l), std::nullopt);
  EXPECT_THROW(rec("zz", 5), OutOfCoverage);
}

TEST(Baselines, RandomIsReproducible) {
  BaselineData d;
  for (int i = 0; i < 50; ++i) d.item_sales[testing::fmt_item(i)] = 1;
  const auto a = make_baseline(BaselineKind::kRandom, d, 7);
  const auto b = make_baseline(BaselineKind::kRandom, d, 7);
  const auto la = a(testing::fmt_item(3), 10);
  EXPECT_EQ(la.entries, b(testing::fmt_item(3), 10).entries);
  EXPECT_EQ(la.entries.size(), 10u);
  std::set<ItemId> uniq;
  for (const auto& e : la.entries) {
    EXPECT_NE(e.item, testing::fmt_item(3));
    uniq.insert(e.item);
  }
  EXPECT_EQ(uniq.size(), 10u);
  const auto c = make_baseline(BaselineKind::kRandom, d, 8);
  EXPECT_NE(c(testing::fmt_item(3), 10).entries, la.entries);
  EXPECT_EQ(parse_baseline("co_purchases"), BaselineKind::kCoPurchases);
  EXPECT_THROW(parse_baseline("popular"), ConfigError);
}

TEST(EvalReport, TableAndJsonl) {
  EvalReport r;
  EvalRow row;
  row.model = "in-out";
  row.k = 20;
  row.precision = 0.25;
  row.recall = 0.5;
  row.product_coverage = 0.75;
  r.rows.push_back(row);
  const auto j = nlohmann::json::parse(r.to_jsonl());
  EXPECT_EQ(j["model"], "in-out");
  EXPECT_EQ(j["K"], 20);
  EXPECT_DOUBLE_EQ(j["recall"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["product_coverage"].get<double>(), 0.75);
  EXPECT_TRUE(j["taxonomy_coverage"].is_null());
  EXPECT_NE(r.to_table().find("in-out"), std::string::npos);
  EXPECT_EQ(r.find("in-out", "combined", 50), nullptr);
}

}  // namespace
}  // namespace dualrec

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

// Acceptance gate. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails. Thresholds are fixed below.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/augment.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/eval.hpp"
#include "dualrec/model_io.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/sgns.hpp"
#include "dualrec/synth.hpp"
#include "dualrec/text.hpp"
#include "dualrec/tune.hpp"
#include "test_util.hpp"

namespace dualrec {
namespace {

namespace fs = std::filesystem;

// Criterion 1
constexpr int kGradConfigs = 100;
constexpr std::size_t kGradDim = 8;
constexpr double kGradStep = 1e-4;
constexpr double kGradRelTol = 1e-5;
constexpr double kGradSeconds = 5.0;
// Criterion 2
constexpr int kSeparationSeeds = 5;
constexpr int kSeparationMinSeeds = 4;
constexpr double kSeparationFactor = 2.0;
constexpr double kSeparationSeconds = 600.0;
// Criterion 3
constexpr int kMattressSeeds = 5;
constexpr int kMattressMinSeeds = 4;
constexpr double kMattressSeconds = 10.0;
// Criterion 4
constexpr int kMetricInstances = 1000;
// Criterion 5
constexpr int kAnnVectors = 10000;
constexpr std::size_t kAnnDim = 50;
constexpr std::size_t kAnnDegree = 16;
constexpr std::size_t kAnnEfSearch = 100;
constexpr int kAnnQueries = 1000;
constexpr double kAnnMinRecall = 0.95;
constexpr double kAnnSeconds = 120.0;
// Criterion 6
constexpr double kHoldoutFraction = 0.3;
constexpr double kMinAugmentedCoverage = 0.95;
// Criterion 8
constexpr std::size_t kTuneBudget = 20;
constexpr double kTuneDevFraction = 0.1;

enum class Status { kPass, kFail, kSkip };

struct Verdict {
  Status status = Status::kFail;
  std::string detail;
};

Verdict pass_if(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ----------------------------------------------------------------- 1

Verdict gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260101);
  std::normal_distribution<double> nd(0.0, 0.5);
  double worst = 0.0;
  for (int trial = 0; trial < kGradConfigs; ++trial) {
    const int negatives = 1 + trial % 5;
    std::vector<std::vector<double>> vecs(2 + negatives, std::vector<double>(kGradDim));
    for (auto& v : vecs)
      for (auto& x : v) x = nd(rng);
    const auto negs = [&] {
      return std::vector<std::span<const double>>(vecs.begin() + 2, vecs.end());
    };
    const auto loss = [&] { return sgns_loss<double>(vecs[0], vecs[1], negs()); };
    const auto g = sgns_gradient<double>(vecs[0], vecs[1], negs());
    for (std::size_t v = 0; v < vecs.size(); ++v) {
      const auto& analytic = v == 0 ? g.target : v == 1 ? g.context : g.negatives[v - 2];
      for (std::size_t i = 0; i < kGradDim; ++i) {
        const double saved = vecs[v][i];
        vecs[v][i] = saved + kGradStep;
        const double up = loss();
        vecs[v][i] = saved - kGradStep;
        const double down = loss();
        vecs[v][i] = saved;
        const double numeric = (up - down) / (2 * kGradStep);
        const double scale = std::max({1e-8, std::abs(numeric), std::abs(analytic[i])});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
      }
    }
  }
  const double secs = seconds_since(start);
  return pass_if(worst < kGradRelTol && secs < kGradSeconds,
                 fmt::format("max relative error {:.3e} (< {:.0e}), {:.2f}s (< {:.0f}s)", worst,
                             kGradRelTol, secs, kGradSeconds));
}

// ----------------------------------------------------------------- 2

struct SynthCorpus {
  World world;
  GeneratedSessions sessions;
  PairBuild built;
  TaxonomyPairStats taxonomy;
  PairDataset pairs;  // filtered training pairs
};

SynthCorpus make_corpus(const WorldConfig& wc) {
  SynthCorpus c{generate_world(wc), {}, {}, {}, {}};
  c.sessions = generate_sessions(c.world, wc);
  c.built = build_pairs(c.sessions.purchases);
  c.taxonomy = build_taxonomy_pairs(c.built.pairs, c.world.catalog);
  c.pairs = filter_pairs(c.built.pairs, c.world.catalog, FilterConfig{}, c.taxonomy);
  return c;
}

BaselineData baseline_data(const SynthCorpus& c) {
  BaselineData data;
  data.pairs = c.pairs;
  for (const auto& [item, n] : c.built.stats.item_counts) data.item_sales[item] = n;
  return data;
}

Verdict dual_separation() {
  const auto start = std::chrono::steady_clock::now();
  int separated = 0;
  int beats_baseline = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeparationSeeds; ++seed) {
    WorldConfig wc;
    wc.seed = static_cast<std::uint64_t>(seed);
    const auto corpus = make_corpus(wc);
    TrainConfig tc = default_train_config();
    tc.seed = static_cast<std::uint64_t>(seed);
    const auto model = train_pairs(corpus.pairs, tc).model;
    const auto truth = truth_ground_truth(corpus.world.truth);
    const ExactIndex out(model, MatrixSide::kOutput);
    const ExactIndex in(model, MatrixSide::kInput);
    EvalOptions eo;
    eo.ks = {20};
    eo.threads = 0;
    const auto recall = [&](const Recommender& r) { return evaluate(r, truth, eo).rows[0].recall; };
    const double io = recall(make_retrieval_recommender(model, out, Variant::kInOut));
    const double ii = recall(make_retrieval_recommender(model, in, Variant::kInIn));
    const double oo = recall(make_retrieval_recommender(model, out, Variant::kOutOut));
    const double cp =
        recall(make_baseline(BaselineKind::kCoPurchases, baseline_data(corpus), wc.seed));
    const bool sep = io >= kSeparationFactor * ii && io >= kSeparationFactor * oo;
    separated += sep;
    beats_baseline += io >= cp;
    detail += fmt::format(" s{}:io={:.4f},ii={:.4f},oo={:.4f},cp={:.4f}", seed, io, ii, oo, cp);
  }
  const double secs = seconds_since(start);
  return pass_if(separated >= kSeparationMinSeeds && beats_baseline == kSeparationSeeds &&
                     secs < kSeparationSeconds,
                 fmt::format("2x separation on {}/{} seeds (need {}), in-out >= co-purchases on "
                             "{}/{}, {:.1f}s;{}",
                             separated, kSeparationSeeds, kSeparationMinSeeds, beats_baseline,
                             kSeparationSeeds, secs, detail));
}

// ----------------------------------------------------------------- 3

Verdict mattress_fixture() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<const char*, const char*>> fixture{
      {"queen_mattress", "bed_sheet"}, {"twin_mattress", "bed_sheet"},
      {"desk", "desk_chair"},          {"desk_lamp", "light_bulb"},
      {"sofa", "throw_pillow"},        {"coffee_maker", "coffee_filter"},
      {"rug", "rug_pad"}};
  std::vector<PairRecord> records;
  for (const auto& [a, b] : fixture) records.push_back(testing::pair(a, b, 20));
  const auto pairs = PairDataset::from_records(records);
  int ok = 0;
  for (int seed = 1; seed <= kMattressSeeds; ++seed) {
    TrainConfig tc;
    tc.dim = 16;
    tc.negatives = 3;
    tc.subsample_t = std::numeric_limits<double>::infinity();
    tc.max_epochs = 50;
    tc.seed = static_cast<std::uint64_t>(seed);
    const auto m = train_pairs(pairs, tc).model;
    const ExactIndex out(m, MatrixSide::kOutput);
    const ExactIndex in(m, MatrixSide::kInput);
    const auto top1 = [&](const char* item, Variant v, const VectorIndex& idx) {
      return query(m, item, v, 1, idx).entries.at(0).item;
    };
    ok += top1("queen_mattress", Variant::kInOut, out) == "bed_sheet" &&
          top1("twin_mattress", Variant::kInOut, out) == "bed_sheet" &&
          top1("queen_mattress", Variant::kInIn, in) == "twin_mattress";
  }
  const double secs = seconds_since(start);
  return pass_if(ok >= kMattressMinSeeds && secs < kMattressSeconds,
                 fmt::format("{}/{} seeds (need {}), {:.2f}s (< {:.0f}s)", ok, kMattressSeeds,
                             kMattressMinSeeds, secs, kMattressSeconds));
}

// ----------------------------------------------------------------- 4

Verdict metric_oracle() {
  std::mt19937_64 rng(4);
  int mismatches = 0;
  int identity_failures = 0;
  for (int instance = 0; instance < kMetricInstances; ++instance) {
    const int universe = 2 + static_cast<int>(rng() % 30);
    std::vector<ItemId> truth;
    std::vector<ItemId> ranked;
    for (int i = 0; i < universe; ++i) {
      if (rng() % 3 == 0) truth.push_back(testing::fmt_item(i));
    }
    if (truth.empty()) truth.push_back(testing::fmt_item(0));
    std::vector<int> perm(static_cast<std::size_t>(universe));
    for (int i = 0; i < universe; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int p : perm) {
      if (rng() % 2) ranked.push_back(testing::fmt_item(p));
    }
    const std::size_t k = 1 + rng() % 25;
    // Oracle: explicit set intersection of the truth and the first K.
    std::set<ItemId> t(truth.begin(), truth.end());
    std::set<ItemId> r(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(k, ranked.size())));
    std::vector<ItemId> both;
    std::set_intersection(t.begin(), t.end(), r.begin(), r.end(), std::back_inserter(both));
    const auto h = precision_recall_at_k(truth, ranked, k);
    if (h.hits != both.size() || h.k != k || h.truth_size != t.size()) ++mismatches;
    // Identity: P@K * K == R@K * |L| == hits.
    const double hits = static_cast<double>(both.size());
    if (std::abs(h.precision() * static_cast<double>(k) - hits) > 1e-9 ||
        std::abs(h.recall() * static_cast<double>(t.size()) - hits) > 1e-9) {
      ++identity_failures;
    }
  }
  return pass_if(mismatches == 0 && identity_failures == 0,
                 fmt::format("{} instances, {} oracle mismatches, {} identity failures",
                             kMetricInstances, mismatches, identity_failures));
}

// ----------------------------------------------------------------- 5

Verdict ann_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<ItemId> vocab;
  for (int i = 0; i < kAnnVectors; ++i) vocab.push_back(testing::fmt_item(i));
  DualEmbedding m(vocab, kAnnDim);
  std::mt19937_64 rng(5);
  std::normal_distribution<float> nd;
  for (auto& x : m.output_matrix()) x = nd(rng);
  for (auto& x : m.input_matrix()) x = nd(rng);
  AnnConfig cfg;
  cfg.graph_degree = kAnnDegree;
  cfg.ef_search = kAnnEfSearch;
  const AnnIndex ann(m, MatrixSide::kOutput, cfg);
  const ExactIndex exact(m, MatrixSide::kOutput);
  std::size_t hits = 0;
  std::uniform_int_distribution<std::uint32_t> pick(0, kAnnVectors - 1);
  for (int q = 0; q < kAnnQueries; ++q) {
    const auto row = pick(rng);
    std::set<std::uint32_t> truth;
    for (const auto& n : exact.search(m.input_row(row), 10)) truth.insert(n.row);
    for (const auto& n : ann.search(m.input_row(row), 10)) hits += truth.contains(n.row);
  }
  const double recall = static_cast<double>(hits) / (10.0 * kAnnQueries);
  const double secs = seconds_since(start);
  return pass_if(recall >= kAnnMinRecall && secs < kAnnSeconds,
                 fmt::format("recall@10 {:.4f} (>= {:.2f}), {:.1f}s (< {:.0f}s)", recall,
                             kAnnMinRecall, secs, kAnnSeconds));
}

// ----------------------------------------------------------------- 6, 7

struct AugmentedWorld {
  SynthCorpus corpus;
  DualEmbedding base;
  std::unique_ptr<EmbeddingSimilarity> similarity;
  AugmentConfig augment_cfg;
  AugmentResult augmented;
  DualEmbedding da;
};

const AugmentedWorld& augmented_world() {
  static const auto world = [] {
    auto w = std::make_unique<AugmentedWorld>();
    WorldConfig wc;
    wc.seed = 1;
    wc.holdout_item_fraction = kHoldoutFraction;
    w->corpus = make_corpus(wc);
    TrainConfig tc = default_train_config();
    tc.seed = wc.seed;
    w->base = train_pairs(w->corpus.pairs, tc).model;
    const auto clicks = train_sequences(w->corpus.sessions.clicks, tc).model;
    w->similarity = std::make_unique<EmbeddingSimilarity>(clicks);
    const FilterConfig fc;
    const TaxonomyFilter taxonomy{w->corpus.world.catalog, w->corpus.taxonomy, fc};
    w->augmented = augment_dataset(w->corpus.pairs, *w->similarity, w->augment_cfg, &taxonomy);
    w->da = train_pairs(w->augmented.dataset, tc).model;
    return w;
  }();
  return *world;
}

Verdict coverage_expansion() {
  const auto& w = augmented_world();
  const auto truth = build_ground_truth(w.corpus.sessions.test_purchases);
  const ExactIndex base_out(w.base, MatrixSide::kOutput);
  const ExactIndex da_out(w.da, MatrixSide::kOutput);
  const auto base = make_retrieval_recommender(w.base, base_out, Variant::kInOut);
  const auto da = make_retrieval_recommender(w.da, da_out, Variant::kInOut);
  const Recommender da_ia = [&](const ItemId& t, std::size_t k) {
    return query_with_ia(t, w.da, *w.similarity, k, da_out);
  };
  const auto& catalog = w.corpus.world.catalog;
  const double c_base = coverage_report(base, catalog, truth, 0).product_coverage;
  const double c_da = coverage_report(da, catalog, truth, 0).product_coverage;
  const double c_ia = coverage_report(da_ia, catalog, truth, 0).product_coverage;

  const auto split = split_coverage(truth, [&](const ItemId& i) { return w.base.contains(i); });
  const auto ooc = truth.subset(split.out_of_coverage);
  EvalOptions eo;
  eo.ks = {20};
  eo.threads = 0;
  const double r_ia = evaluate(da_ia, ooc, eo).rows[0].recall;
  const double r_random =
      evaluate(make_baseline(BaselineKind::kRandom, baseline_data(w.corpus), 1), ooc, eo)
          .rows[0]
          .recall;
  const bool ok = c_base <= c_da && c_da <= c_ia && c_base < c_ia &&
                  c_ia >= kMinAugmentedCoverage && r_ia > r_random;
  return pass_if(ok, fmt::format("coverage base {:.4f} -> DA {:.4f} -> DA+IA {:.4f} (>= {:.2f}); "
                                 "out-of-coverage R@20 DA+IA {:.4f} vs random {:.4f} over {} "
                                 "queries",
                                 c_base, c_da, c_ia, kMinAugmentedCoverage, r_ia, r_random,
                                 ooc.size()));
}

// Independent recomputation of one audit record.
bool audit_record_consistent(const AuditRecord& a, double gamma) {
  const double c = static_cast<double>(a.source_count);
  if (a.provenance == Provenance::kSyntheticSingle) {
    if (a.substitute_a.has_value() == a.substitute_b.has_value()) return false;
    const auto& s = a.substitute_a ? *a.substitute_a : *a.substitute_b;
    const ItemId& kept = a.substitute_a ? a.source.second : a.source.first;
    const PairKey key = s.item < kept ? PairKey{s.item, kept} : PairKey{kept, s.item};
    return key == a.synthetic &&
           a.count == static_cast<std::uint64_t>(std::floor(gamma * c * s.score));
  }
  if (!a.substitute_a || !a.substitute_b) return false;
  const auto& x = a.substitute_a->item;
  const auto& y = a.substitute_b->item;
  const PairKey key = x < y ? PairKey{x, y} : PairKey{y, x};
  const double mean = (a.substitute_a->score + a.substitute_b->score) / 2.0;
  return key == a.synthetic && a.count == static_cast<std::uint64_t>(std::floor(gamma * c * mean));
}

Verdict augmentation_counts() {
  std::size_t checked = 0;
  std::size_t bad_counts = 0;
  std::size_t bad_candidates = 0;
  const auto check = [&](const AugmentResult& r, const AugmentConfig& cfg) {
    for (const auto& a : r.audit) {
      ++checked;
      bad_counts += !audit_record_consistent(a, cfg.gamma);
      const auto* rec = r.dataset.find(a.synthetic.first, a.synthetic.second);
      if (!rec || rec->count != a.count || rec->provenance != a.provenance) ++bad_counts;
    }
    const std::size_t cap = cfg.k_similar * cfg.k_similar + 2 * cfg.k_similar;
    for (auto n : r.candidates_per_pair) bad_candidates += n > cap;
  };

  const auto& w = augmented_world();
  check(w.augmented, w.augment_cfg);

  // Random fixtures across fan-outs and discounts.
  std::mt19937_64 rng(7);
  for (std::size_t k = 1; k <= 4; ++k) {
    testing::TableSimilarity sim;
    std::uniform_real_distribution<double> score(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 8; ++j) {
        const int other = static_cast<int>(rng() % 60);
        if (other != i) sim.add(testing::fmt_item(i), testing::fmt_item(other), score(rng));
      }
    }
    std::vector<PairRecord> recs;
    std::set<PairKey> seen;
    while (recs.size() < 150) {
      const auto a = testing::fmt_item(static_cast<int>(rng() % 60));
      const auto b = testing::fmt_item(static_cast<int>(rng() % 60));
      if (a == b || !seen.insert(canonical_pair(a, b)).second) continue;
      recs.push_back(testing::pair(a.c_str(), b.c_str(), 1 + rng() % 40));
    }
    AugmentConfig cfg;
    cfg.k_similar = k;
    cfg.gamma = 0.2 + 0.15 * static_cast<double>(k);
    cfg.min_similarity = 0.1 * static_cast<double>(k);
    check(augment_dataset(PairDataset::from_records(recs), sim, cfg), cfg);
  }
  return pass_if(checked > 0 && bad_counts == 0 && bad_candidates == 0,
                 fmt::format("{} synthetic pairs recomputed, {} count mismatches, {} pairs over "
                             "the k^2+2k candidate bound",
                             checked, bad_counts, bad_candidates));
}

// ----------------------------------------------------------------- 8

Verdict tuning_direction() {
  const auto start = std::chrono::steady_clock::now();
  WorldConfig wc;
  wc.seed = 1;
  const auto corpus = make_corpus(wc);
  const auto split = make_dev_split(corpus.pairs, kTuneDevFraction, wc.seed);
  std::size_t leaked = 0;
  for (const auto& r : split.dev_pairs.records()) leaked += split.train.contains(r.item_a, r.item_b);
  for (const auto& r : split.train.records()) leaked += split.dev_pairs.contains(r.item_a, r.item_b);

  const auto objective = make_dev_objective(split.train, split.dev);
  TrainConfig base = default_train_config();
  base.seed = wc.seed;
  const double reference = objective(base).dev_recall;
  const auto result = random_search(SearchSpace{}, kTuneBudget, objective, base, wc.seed, 0);
  const double best = result.best_outcome.dev_recall;
  return pass_if(best >= reference && leaked == 0,
                 fmt::format("best dev R@20 {:.4f} (trial {}) vs default {:.4f} ({:+.1f}%); "
                             "{} dev/train overlaps; {:.1f}s",
                             best, result.best_index, reference,
                             reference > 0 ? 100.0 * (best - reference) / reference : 0.0, leaked,
                             seconds_since(start)));
}

// ----------------------------------------------------------------- 9

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  testing::TempDir dir;
  const std::string cli = std::string(DUALREC_CLI_PATH) + " --log-level warn";
  const std::string quiet = " 2>/dev/null";
  const std::string world = dir.file("world");
  if (run_command(cli + " synth --out-dir " + world +
                  " --set synth.n_purchase_sessions=10000 --set synth.n_click_sessions=10"
                  " --set synth.n_test_sessions=10" + quiet) != 0) {
    return {Status::kFail, "synth step failed"};
  }
  std::vector<std::string> pair_fp;
  std::vector<std::string> model_fp;
  for (int run = 0; run < 2; ++run) {
    const auto pairs = dir.file(fmt::format("pairs{}.tsv", run));
    const auto model = dir.file(fmt::format("model{}.emb", run));
    if (run_command(cli + " ingest --threads 1 --seed 3 --sessions " + world +
                    "/purchases.tsv --catalog " + world + "/catalog.tsv --out " + pairs + quiet) !=
            0 ||
        run_command(cli + " train --threads 1 --seed 3 --pairs " + pairs + " --out " + model +
                    " --set train.dim=32 --set train.max_epochs=3" + quiet) != 0) {
      return {Status::kFail, fmt::format("pipeline run {} failed", run + 1)};
    }
    pair_fp.push_back(fingerprint_file(pairs));
    model_fp.push_back(fingerprint_file(model));
  }
  return pass_if(pair_fp[0] == pair_fp[1] && model_fp[0] == model_fp[1],
                 fmt::format("pairs {} / {}, model {} / {}", pair_fp[0].substr(0, 12),
                             pair_fp[1].substr(0, 12), model_fp[0].substr(0, 12),
                             model_fp[1].substr(0, 12)));
}

// ----------------------------------------------------------------- 10

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

template <typename Fn>
void for_each_csv_row(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) fn(csv_fields(line));
  }
}

Verdict instacart_smoke() {
  const char* dir_env = std::getenv("DUALREC_INSTACART_DIR");
  if (!dir_env || !*dir_env) {
    return {Status::kSkip, "set DUALREC_INSTACART_DIR to the extracted dataset to run"};
  }
  const fs::path dir(dir_env);
  // orders.csv: order_id,user_id,eval_set,...; prior orders train, the
  // "train" evaluation set is held out for testing.
  std::unordered_map<std::string, std::pair<std::string, bool>> orders;
  for_each_csv_row(dir / "orders.csv", [&](const std::vector<std::string>& f) {
    if (f.size() < 3 || f[2] == "test") return;
    orders[f[0]] = {f[1], f[2] == "train"};
  });
  Catalog catalog;
  for_each_csv_row(dir / "products.csv", [&](const std::vector<std::string>& f) {
    if (f.size() < 4) return;
    catalog.add(CatalogEntry{f[0], {"dept" + f[f.size() - 1], "aisle" + f[f.size() - 2]}, f[1]});
  });
  std::map<std::string, Session> train_sessions;
  std::map<std::string, Session> test_sessions;
  for (const char* file : {"order_products__prior.csv", "order_products__train.csv"}) {
    for_each_csv_row(dir / file, [&](const std::vector<std::string>& f) {
      const auto it = orders.find(f[0]);
      if (it == orders.end()) return;
      auto& s = (it->second.second ? test_sessions : train_sessions)[f[0]];
      s.user_id = it->second.first;
      s.session_id = f[0];
      s.items.push_back(f[1]);
    });
  }
  SessionSet train;
  for (auto& [_, s] : train_sessions) train.sessions.push_back(std::move(s));
  std::vector<Session> test;
  for (auto& [_, s] : test_sessions) test.push_back(std::move(s));

  const FilterConfig fc;
  const auto kept = filter_outliers(train, fc);
  const auto built = build_pairs(kept.sessions);
  const auto taxonomy = build_taxonomy_pairs(built.pairs, catalog);
  const auto pairs = filter_pairs(built.pairs, catalog, fc, taxonomy);
  TrainConfig tc = default_train_config();
  tc.threads = 0;
  const auto model = train_pairs(pairs, tc).model;
  const auto truth = build_ground_truth(test);
  const ExactIndex out(model, MatrixSide::kOutput, 0);
  BaselineData data;
  data.pairs = pairs;
  for (const auto& [item, n] : built.stats.item_counts) data.item_sales[item] = n;
  EvalOptions eo;
  eo.ks = {20};
  eo.threads = 0;
  const double io =
      evaluate(make_retrieval_recommender(model, out, Variant::kInOut), truth, eo).rows[0].precision;
  const double ts =
      evaluate(make_baseline(BaselineKind::kTopSellers, data, 1), truth, eo).rows[0].precision;
  return pass_if(io > ts, fmt::format("in-out P@20 {:.4f} vs top-sellers P@20 {:.4f}", io, ts));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace dualrec

int main() {
  using namespace dualrec;
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness},
      {2, "dual-embedding separation", dual_separation},
      {3, "mattress micro-fixture", mattress_fixture},
      {4, "metric oracle equivalence", metric_oracle},
      {5, "ANN fidelity", ann_fidelity},
      {6, "DA/IA coverage expansion", coverage_expansion},
      {7, "augmentation count formulas", augmentation_counts},
      {8, "tuning direction", tuning_direction},
      {9, "determinism", determinism},
      {10, "public-data smoke run", instacart_smoke},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.status == Status::kPass ? "PASS" : v.status == Status::kFail ? "FAIL" : "SKIP";
    failures += v.status == Status::kFail;
    fmt::print("{} [{:>2}] {}: {} ({:.1f}s)\n", tag, c.id, c.name, v.detail,
               seconds_since(start));
    std::fflush(stdout);
  }
  fmt::print("{} criteria, {} failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}

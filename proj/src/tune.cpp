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

#include "dualrec/tune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dualrec/kernels.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/text.hpp"

namespace dualrec {

DevSplit make_dev_split(const PairDataset& pairs, double fraction,
                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError(fmt::format("dev fraction {} outside (0, 1)", fraction));
  }
  const std::size_t n = pairs.size();
  const auto n_dev = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_dev == 0 || n_dev == n) {
    throw ConfigError(fmt::format("dev split of {} pairs leaves an empty side", n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_dev(n, false);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;

  std::vector<PairRecord> train;
  std::vector<PairRecord> dev;
  for (std::size_t i = 0; i < n; ++i) {
    (is_dev[i] ? dev : train).push_back(pairs.records()[i]);
  }
  DevSplit out;
  out.train = PairDataset::from_records(std::move(train));
  out.dev_pairs = PairDataset::from_records(std::move(dev));
  out.dev = ground_truth_from_pairs(out.dev_pairs);
  return out;
}

void SearchSpace::validate() const {
  if (negatives.lo < 1 || negatives.lo > negatives.hi) {
    throw ConfigError("negatives range must satisfy 1 <= lo <= hi");
  }
  if (!(noise_exponent.lo < noise_exponent.hi)) {
    throw ConfigError("noise_exponent range is empty");
  }
  if (!(subsample_t.lo > 0.0 && subsample_t.lo <= subsample_t.hi)) {
    throw ConfigError("subsample_t range must satisfy 0 < lo <= hi");
  }
  if (!(learning_rate.lo > 0.0 && learning_rate.lo <= learning_rate.hi)) {
    throw ConfigError("learning_rate range must satisfy 0 < lo <= hi");
  }
  if (dim.lo < 1 || dim.lo > dim.hi) {
    throw ConfigError("dim range must satisfy 1 <= lo <= hi");
  }
}

SearchSpace SearchSpace::parse(std::istream& in) {
  SearchSpace space;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    auto body = std::string_view(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    if (is_blank(body)) continue;
    const auto eq = body.find('=');
    const auto bad = [&](std::string_view why) {
      return ConfigError(fmt::format("search space line {}: {}", line_no, why));
    };
    if (eq == std::string_view::npos) throw bad("expected key = lo,hi");
    const auto key = trim(body.substr(0, eq));
    const auto bounds = split(trim(body.substr(eq + 1)), ',');
    if (bounds.size() != 2) throw bad("expected two comma-separated bounds");
    const auto real = [&](RealRange& r) {
      if (!parse_number(trim(bounds[0]), r.lo) || !parse_number(trim(bounds[1]), r.hi)) {
        throw bad("bounds must be numbers");
      }
    };
    const auto integer = [&](IntRange& r) {
      if (!parse_number(trim(bounds[0]), r.lo) || !parse_number(trim(bounds[1]), r.hi)) {
        throw bad("bounds must be integers");
      }
    };
    if (key == "negatives") {
      integer(space.negatives);
    } else if (key == "noise_exponent") {
      real(space.noise_exponent);
    } else if (key == "subsample_t") {
      real(space.subsample_t);
    } else if (key == "learning_rate") {
      real(space.learning_rate);
    } else if (key == "dim") {
      integer(space.dim);
    } else {
      throw bad(fmt::format("unknown key '{}'", key));
    }
  }
  space.validate();
  return space;
}

SearchSpace SearchSpace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open search space file " + path);
  return parse(in);
}

TrainConfig SearchSpace::sample(Rng& rng, const TrainConfig& base) const {
  TrainConfig cfg = base;
  cfg.negatives = std::uniform_int_distribution<int>(negatives.lo, negatives.hi)(rng);
  std::uniform_real_distribution<double> alpha(noise_exponent.lo, noise_exponent.hi);
  do {
    cfg.noise_exponent = alpha(rng);
  } while (cfg.noise_exponent == noise_exponent.lo);  // open interval
  cfg.subsample_t = std::exp(std::uniform_real_distribution<double>(
      std::log(subsample_t.lo), std::log(subsample_t.hi))(rng));
  cfg.subsample_t = std::clamp(cfg.subsample_t, subsample_t.lo, subsample_t.hi);
  cfg.learning_rate =
      std::uniform_real_distribution<double>(learning_rate.lo, learning_rate.hi)(rng);
  cfg.dim = std::uniform_int_distribution<int>(dim.lo, dim.hi)(rng);
  return cfg;
}

TrainConfig default_train_config() {
  TrainConfig cfg;
  cfg.negatives = 5;
  cfg.noise_exponent = 0.75;
  cfg.subsample_t = 1e-3;
  cfg.learning_rate = 0.05;
  cfg.dim = 100;
  return cfg;
}

SearchResult random_search(const SearchSpace& space, std::size_t budget,
                           const Objective& objective, const TrainConfig& base,
                           std::uint64_t seed, int parallel) {
  if (budget == 0) throw ConfigError("tuning budget must be >= 1");
  space.validate();
  Rng rng(seed);
  SearchResult result;
  result.trials.resize(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    result.trials[i].index = i;
    result.trials[i].config = space.sample(rng, base);
  }

  const auto n = static_cast<std::int64_t>(budget);
  const int workers = kernels::resolve_threads(parallel);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& trial = result.trials[static_cast<std::size_t>(i)];
    const auto start = std::chrono::steady_clock::now();
    try {
      trial.outcome = objective(trial.config);
    } catch (const std::exception& e) {
      trial.error = e.what();
    }
    trial.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  std::optional<std::size_t> best;
  for (const auto& trial : result.trials) {
    if (!trial.outcome) {
      spdlog::warn("trial {} failed: {}", trial.index, trial.error);
      continue;
    }
    if (!best || trial.outcome->dev_recall > result.trials[*best].outcome->dev_recall) {
      best = trial.index;
    }
  }
  if (!best) {
    std::string log;
    for (const auto& t : result.trials) log += fmt::format("\n  trial {}: {}", t.index, t.error);
    throw TuningError("all tuning trials failed:" + log);
  }
  result.best_index = *best;
  result.best = result.trials[*best].config;
  result.best_outcome = *result.trials[*best].outcome;
  return result;
}

DevScorer make_dev_scorer(const GroundTruth& dev, int threads) {
  return [&dev, threads](const DualEmbedding& model) {
    const ExactIndex index(model, MatrixSide::kOutput);
    EvalOptions options;
    options.ks = {20};
    options.threads = threads;
    const auto report =
        evaluate(make_retrieval_recommender(model, index, Variant::kInOut), dev, options);
    return report.rows.front().recall;
  };
}

Objective make_dev_objective(const PairDataset& train, const GroundTruth& dev,
                             int eval_threads) {
  return [&train, &dev, eval_threads](const TrainConfig& cfg) {
    const auto scorer = make_dev_scorer(dev, eval_threads);
    const auto trained = train_pairs(train, cfg, scorer);
    const ExactIndex index(trained.model, MatrixSide::kOutput);
    EvalOptions options;
    options.ks = {20};
    options.threads = eval_threads;
    const auto report = evaluate(
        make_retrieval_recommender(trained.model, index, Variant::kInOut), dev, options);
    TrialOutcome out;
    out.dev_recall = report.rows.front().recall;
    out.dev_precision = report.rows.front().precision;
    out.epochs = static_cast<int>(trained.history.size());
    return out;
  };
}

void write_trial_log(std::ostream& out, const SearchResult& result) {
  for (const auto& t : result.trials) {
    nlohmann::json j;
    j["trial"] = t.index;
    j["negatives"] = t.config.negatives;
    j["noise_exponent"] = t.config.noise_exponent;
    j["subsample_t"] = t.config.subsample_t;
    j["learning_rate"] = t.config.learning_rate;
    j["dim"] = t.config.dim;
    j["seed"] = t.config.seed;
    if (t.outcome) {
      j["dev_recall_at_20"] = t.outcome->dev_recall;
      j["dev_precision_at_20"] = t.outcome->dev_precision;
      j["epochs"] = t.outcome->epochs;
    } else {
      j["error"] = t.error;
    }
    j["seconds"] = t.seconds;
    j["best"] = t.index == result.best_index;
    out << j.dump() << '\n';
  }
}

}  // namespace dualrec

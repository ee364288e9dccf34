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

// Hyperparameter search on a held-out co-purchase prediction task.

#ifndef DUALREC_TUNE_HPP_
#define DUALREC_TUNE_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualrec/corpus.hpp"
#include "dualrec/eval.hpp"
#include "dualrec/sgns.hpp"

namespace dualrec {

struct DevSplit {
  PairDataset train;      // dev pairs removed entirely
  PairDataset dev_pairs;
  GroundTruth dev;        // dev pairs ranked per target
};

/// Holds out round(fraction * |pairs|) unique pairs chosen by a seeded
/// shuffle. Throws ConfigError for a fraction outside (0, 1) or when either
/// side would be empty.
DevSplit make_dev_split(const PairDataset& pairs, double fraction,
                        std::uint64_t seed);

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Sampling ranges. Integer ranges are inclusive; noise_exponent is open;
/// subsample_t is sampled log-uniformly.
struct SearchSpace {
  IntRange negatives{5, 30};
  RealRange noise_exponent{-1.0, 1.0};
  RealRange subsample_t{1e-4, 1e-2};
  RealRange learning_rate{0.05, 0.15};
  IntRange dim{20, 100};

  void validate() const;  // throws ConfigError on an empty or invalid range
  /// `key = lo,hi` lines; '#' comments. Unknown keys throw ConfigError.
  static SearchSpace parse(std::istream& in);
  static SearchSpace load(const std::string& path);

  /// `base` with the searched fields replaced.
  TrainConfig sample(Rng& rng, const TrainConfig& base) const;
};

/// Skip-gram defaults used as the untuned reference.
TrainConfig default_train_config();

struct TrialOutcome {
  double dev_recall = 0.0;  // Recall@20
  double dev_precision = 0.0;
  int epochs = 0;
};

using Objective = std::function<TrialOutcome(const TrainConfig&)>;

struct TrialRecord {
  std::size_t index = 0;
  TrainConfig config;
  std::optional<TrialOutcome> outcome;  // empty when the trial failed
  std::string error;
  double seconds = 0.0;
};

struct SearchResult {
  TrainConfig best;
  std::size_t best_index = 0;
  TrialOutcome best_outcome;
  std::vector<TrialRecord> trials;  // by trial index
};

/// Samples all `budget` configs up front, evaluates them (`parallel`
/// trials at a time) and returns the highest dev recall; ties go to the
/// lower trial index. Throws TuningError if every trial fails and
/// ConfigError when budget == 0.
SearchResult random_search(const SearchSpace& space, std::size_t budget,
                           const Objective& objective, const TrainConfig& base,
                           std::uint64_t seed, int parallel = 1);

/// Recall@20 of IN_OUT retrieval (exact index) against `dev`.
DevScorer make_dev_scorer(const GroundTruth& dev, int threads = 1);

/// Trains on `train` with early stopping on `dev` and reports the returned
/// checkpoint's dev metrics.
Objective make_dev_objective(const PairDataset& train, const GroundTruth& dev,
                             int eval_threads = 1);

/// One JSON object per trial.
void write_trial_log(std::ostream& out, const SearchResult& result);

}  // namespace dualrec

#endif  // DUALREC_TUNE_HPP_

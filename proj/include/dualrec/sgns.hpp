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

// Skip-gram with negative sampling over dual (input/output) item embeddings.
//
// Two stream shapes are supported. Pair mode consumes an unordered
// co-purchase dataset and emits both directed examples (a -> b, b -> a) for
// every pair occurrence. Sequence mode slides a window over sessions.
// Both feed the same SGD step:
//
//   objective = log s(v_t . v'_c) + sum_n log s(-v_t . v'_n)
//
// maximised by gradient ascent, where v_t is the target's input row and
// v'_c, v'_n are output rows of the context and the sampled negatives.

#ifndef DUALREC_SGNS_HPP_
#define DUALREC_SGNS_HPP_

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualrec/common.hpp"
#include "dualrec/corpus.hpp"

namespace dualrec {

using Rng = std::mt19937_64;

struct TrainConfig {
  int negatives = 5;
  double noise_exponent = 0.75;
  /// Subsampling threshold; +inf (or <= 0) disables subsampling.
  double subsample_t = 1e-3;
  double learning_rate = 0.05;
  int dim = 100;
  int window = 5;  // sequence mode only
  int max_epochs = 10;
  int early_stop_patience = 3;
  std::uint64_t seed = 1;
  /// 1 = deterministic serial trainer; otherwise asynchronous workers.
  int threads = 1;
  /// Per-epoch repetitions of one pair are clamped to this value.
  std::uint64_t max_pair_repeats = 1000;

  void validate(bool sequence_mode = false) const;
};

/// Dual embedding: one input row and one output row per vocabulary item.
/// The vocabulary is sorted and unique, so row order equals item order.
class DualEmbedding {
 public:
  DualEmbedding() = default;
  /// Zero-initialised matrices. Throws ConfigError on an empty vocabulary,
  /// dim == 0, or a vocabulary that is not strictly increasing.
  DualEmbedding(std::vector<ItemId> vocab, std::size_t dim);

  const std::vector<ItemId>& vocab() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return dim_; }

  std::optional<std::uint32_t> row_of(const ItemId& item) const;
  bool contains(const ItemId& item) const { return index_.contains(item); }

  std::span<float> input_row(std::uint32_t row) {
    return {input_.data() + row * dim_, dim_};
  }
  std::span<const float> input_row(std::uint32_t row) const {
    return {input_.data() + row * dim_, dim_};
  }
  std::span<float> output_row(std::uint32_t row) {
    return {output_.data() + row * dim_, dim_};
  }
  std::span<const float> output_row(std::uint32_t row) const {
    return {output_.data() + row * dim_, dim_};
  }

  std::span<float> input_matrix() { return input_; }
  std::span<const float> input_matrix() const { return input_; }
  std::span<float> output_matrix() { return output_; }
  std::span<const float> output_matrix() const { return output_; }

  bool all_finite() const;

  friend bool operator==(const DualEmbedding& a, const DualEmbedding& b) {
    return a.dim_ == b.dim_ && a.vocab_ == b.vocab_ && a.input_ == b.input_ &&
           a.output_ == b.output_;
  }

 private:
  std::vector<ItemId> vocab_;
  std::unordered_map<ItemId, std::uint32_t> index_;
  std::size_t dim_ = 0;
  std::vector<float> input_;
  std::vector<float> output_;
};

/// Input rows uniform in [-0.5/d, 0.5/d], output rows zero. The vocabulary
/// is sorted and de-duplicated first.
DualEmbedding init_model(std::vector<ItemId> vocab, std::size_t dim,
                         std::uint64_t seed);

/// Negative-sampling distribution over model rows, Pr[r] ~ count[r]^alpha.
/// Rows with zero count are never drawn.
class NoiseTable {
 public:
  /// Throws ConfigError if no count is positive.
  NoiseTable(std::span<const std::uint64_t> counts_by_row, double alpha);

  std::uint32_t sample(Rng& rng) const;
  double probability(std::uint32_t row) const;
  std::size_t rows() const { return probability_.size(); }

 private:
  std::vector<double> cumulative_;
  std::vector<std::uint32_t> rows_;
  std::vector<double> probability_;
};

/// Keep probability of one occurrence of an item with relative frequency
/// freq: min(1, sqrt(t / freq)). Throws DomainError when freq <= 0.
double keep_probability(double freq, double t);

template <std::floating_point T>
T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

/// log(sigmoid(x)) without overflow for large |x|.
template <std::floating_point T>
T log_sigmoid(T x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// d/dx log s(x) = 1 - s(x): coefficient of the positive pair.
template <std::floating_point T>
T positive_coefficient(T dot) {
  return T(1) - sigmoid(dot);
}

/// d/dx log s(-x) = -s(x): coefficient of one negative.
template <std::floating_point T>
T negative_coefficient(T dot) {
  return -sigmoid(dot);
}

template <std::floating_point T>
T dot_product(std::span<const T> a, std::span<const T> b) {
  T sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

/// log s(t.c) + sum_i log s(-t.n_i).
template <std::floating_point T>
T sgns_loss(std::span<const T> target, std::span<const T> context,
            const std::vector<std::span<const T>>& negatives) {
  T total = log_sigmoid(dot_product(target, context));
  for (const auto& neg : negatives) total += log_sigmoid(-dot_product(target, neg));
  return total;
}

template <std::floating_point T>
struct SgnsGradient {
  std::vector<T> target;
  std::vector<T> context;
  std::vector<std::vector<T>> negatives;
};

/// Analytic gradient of sgns_loss with respect to every vector.
template <std::floating_point T>
SgnsGradient<T> sgns_gradient(std::span<const T> target,
                              std::span<const T> context,
                              const std::vector<std::span<const T>>& negatives) {
  const std::size_t d = target.size();
  SgnsGradient<T> g;
  g.target.assign(d, T(0));
  const T gp = positive_coefficient(dot_product(target, context));
  g.context.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.context[i] = gp * target[i];
    g.target[i] += gp * context[i];
  }
  for (const auto& neg : negatives) {
    const T gn = negative_coefficient(dot_product(target, neg));
    std::vector<T> gv(d);
    for (std::size_t i = 0; i < d; ++i) {
      gv[i] = gn * target[i];
      g.target[i] += gn * neg[i];
    }
    g.negatives.push_back(std::move(gv));
  }
  return g;
}

/// Scratch buffer reused across steps.
struct StepScratch {
  std::vector<float> target_update;
};

/// One gradient-ascent step on (target row -> context row) with k sampled
/// negatives. Output rows are updated immediately; the target input row
/// receives the accumulated update once at the end. Returns the negated
/// objective before the update (a loss, >= 0).
double sgd_step(DualEmbedding& model, std::uint32_t target,
                std::uint32_t context, const NoiseTable& noise, int negatives,
                float lr, Rng& rng, StepScratch& scratch);

/// Item-keyed variant; throws InputError for items outside the vocabulary.
double sgd_step(DualEmbedding& model, const ItemId& target,
                const ItemId& context, const NoiseTable& noise,
                const TrainConfig& cfg, float lr, Rng& rng);

struct EpochReport {
  int epoch = 0;
  std::uint64_t examples = 0;  // directed examples actually trained
  double mean_loss = 0.0;
  std::optional<double> dev_recall;
};

/// `epoch \t examples \t mean_loss \t dev_recall@20` ('-' when absent).
std::string format_progress(const EpochReport& report);

struct TrainResult {
  DualEmbedding model;
  std::vector<EpochReport> history;
  int best_epoch = 0;  // epoch of the returned model, 0 = initialisation
};

/// Scores a model on held-out data; higher is better.
using DevScorer = std::function<double(const DualEmbedding&)>;
using ProgressSink = std::function<void(const EpochReport&)>;

/// Trains on a pair dataset. With a dev scorer, stops after
/// early_stop_patience epochs without improvement and returns the best
/// checkpoint. Throws ConfigError for an empty dataset.
TrainResult train_pairs(const PairDataset& pairs, const TrainConfig& cfg,
                        const DevScorer& dev = {},
                        const ProgressSink& progress = {});

/// Sliding-window training over sessions (contexts at 0 < |i - j| <= w).
TrainResult train_sequences(std::span<const Session> sessions,
                            const TrainConfig& cfg, const DevScorer& dev = {},
                            const ProgressSink& progress = {});

/// Directed (target, context) examples a window produces over one session,
/// without subsampling.
std::vector<std::pair<std::size_t, std::size_t>> window_examples(
    std::size_t length, int window);

}  // namespace dualrec

#endif  // DUALREC_SGNS_HPP_

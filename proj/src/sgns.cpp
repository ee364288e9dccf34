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

#include "dualrec/sgns.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dualrec {

void TrainConfig::validate(bool sequence_mode) const {
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (early_stop_patience < 1) {
    throw ConfigError("early_stop_patience must be >= 1");
  }
  if (!std::isfinite(noise_exponent)) {
    throw ConfigError("noise_exponent must be finite");
  }
  if (std::isnan(subsample_t)) throw ConfigError("subsample_t is NaN");
  if (max_pair_repeats < 1) throw ConfigError("max_pair_repeats must be >= 1");
  if (sequence_mode && window < 1) throw ConfigError("window must be >= 1");
}

DualEmbedding::DualEmbedding(std::vector<ItemId> vocab, std::size_t dim)
    : vocab_(std::move(vocab)), dim_(dim) {
  if (vocab_.empty()) throw ConfigError("empty vocabulary");
  if (dim_ == 0) throw ConfigError("embedding dimension must be >= 1");
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (i > 0 && !(vocab_[i - 1] < vocab_[i])) {
      throw ConfigError("vocabulary must be sorted and unique");
    }
    index_.emplace(vocab_[i], static_cast<std::uint32_t>(i));
  }
  input_.assign(vocab_.size() * dim_, 0.0f);
  output_.assign(vocab_.size() * dim_, 0.0f);
}

std::optional<std::uint32_t> DualEmbedding::row_of(const ItemId& item) const {
  auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool DualEmbedding::all_finite() const {
  const auto finite = [](float x) { return std::isfinite(x); };
  return std::all_of(input_.begin(), input_.end(), finite) &&
         std::all_of(output_.begin(), output_.end(), finite);
}

DualEmbedding init_model(std::vector<ItemId> vocab, std::size_t dim,
                         std::uint64_t seed) {
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  DualEmbedding model(std::move(vocab), dim);
  Rng rng(seed);
  const float bound = 0.5f / static_cast<float>(dim);
  std::uniform_real_distribution<float> uniform(-bound, bound);
  for (float& x : model.input_matrix()) x = uniform(rng);
  return model;
}

NoiseTable::NoiseTable(std::span<const std::uint64_t> counts_by_row,
                       double alpha)
    : probability_(counts_by_row.size(), 0.0) {
  double total = 0.0;
  std::vector<double> weight(counts_by_row.size(), 0.0);
  for (std::size_t r = 0; r < counts_by_row.size(); ++r) {
    if (counts_by_row[r] == 0) continue;
    weight[r] = std::pow(static_cast<double>(counts_by_row[r]), alpha);
    total += weight[r];
  }
  if (!(total > 0.0)) {
    throw ConfigError("noise table needs at least one positive count");
  }
  double running = 0.0;
  for (std::size_t r = 0; r < weight.size(); ++r) {
    if (weight[r] == 0.0) continue;
    probability_[r] = weight[r] / total;
    running += weight[r];
    cumulative_.push_back(running / total);
    rows_.push_back(static_cast<std::uint32_t>(r));
  }
  cumulative_.back() = 1.0;
}

std::uint32_t NoiseTable::sample(Rng& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return rows_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double NoiseTable::probability(std::uint32_t row) const {
  return row < probability_.size() ? probability_[row] : 0.0;
}

double keep_probability(double freq, double t) {
  if (!(freq > 0.0)) throw DomainError("keep_probability needs freq > 0");
  if (!(t > 0.0) || std::isinf(t)) return 1.0;
  return std::min(1.0, std::sqrt(t / freq));
}

double sgd_step(DualEmbedding& model, std::uint32_t target,
                std::uint32_t context, const NoiseTable& noise, int negatives,
                float lr, Rng& rng, StepScratch& scratch) {
  const std::size_t d = model.dim();
  auto& update = scratch.target_update;
  update.assign(d, 0.0f);
  float* vt = model.input_row(target).data();
  double loss = 0.0;
  const auto apply = [&](std::uint32_t row, bool positive) {
    float* vo = model.output_row(row).data();
    const float f = kernels::dot(vt, vo, d);
    const double fd = f;
    double g;
    if (positive) {
      g = positive_coefficient(fd);
      loss -= log_sigmoid(fd);
    } else {
      g = negative_coefficient(fd);
      loss -= log_sigmoid(-fd);
    }
    if (lr == 0.0f) return;
    const auto step = static_cast<float>(lr * g);
    kernels::axpy(step, vo, update.data(), d);
    kernels::axpy(step, vt, vo, d);
  };
  apply(context, true);
  for (int i = 0; i < negatives; ++i) apply(noise.sample(rng), false);
  if (lr != 0.0f) kernels::axpy(1.0f, update.data(), vt, d);
  return loss;
}

double sgd_step(DualEmbedding& model, const ItemId& target,
                const ItemId& context, const NoiseTable& noise,
                const TrainConfig& cfg, float lr, Rng& rng) {
  const auto t = model.row_of(target);
  const auto c = model.row_of(context);
  if (!t) throw InputError("training stream item not in vocabulary: " + target);
  if (!c) throw InputError("training stream item not in vocabulary: " + context);
  StepScratch scratch;
  return sgd_step(model, *t, *c, noise, cfg.negatives, lr, rng, scratch);
}

std::string format_progress(const EpochReport& report) {
  return fmt::format("{}\t{}\t{:.6f}\t{}", report.epoch, report.examples,
                     report.mean_loss,
                     report.dev_recall ? fmt::format("{:.6f}", *report.dev_recall)
                                       : std::string("-"));
}

std::vector<std::pair<std::size_t, std::size_t>> window_examples(
    std::size_t length, int window) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto w = static_cast<std::size_t>(std::max(window, 0));
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t lo = i >= w ? i - w : 0;
    const std::size_t hi = std::min(length - 1, i + w);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

bool keep_occurrence(double p, Rng& rng) {
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::vector<double> keep_table(std::span<const std::uint64_t> counts, double t) {
  const double total = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> keep(counts.size(), 1.0);
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] > 0) {
      keep[r] = keep_probability(static_cast<double>(counts[r]) / total, t);
    }
  }
  return keep;
}

struct UnitOutcome {
  double loss = 0.0;
  std::uint64_t examples = 0;
};

// Processes one stream unit (a pair occurrence or a session) at the given
// learning rate.
using UnitFn = std::function<UnitOutcome(std::uint32_t unit, float lr,
                                         Rng& rng, StepScratch& scratch)>;

// Shared epoch loop over `model`, which `process` updates. `order` lists stream units for one epoch (shuffled
// every epoch) and `nominal` gives the number of directed examples each unit
// stands for before subsampling; the learning rate decays linearly with the
// nominal examples consumed.
TrainResult run_epochs(DualEmbedding& model, const TrainConfig& cfg,
                       std::vector<std::uint32_t> order,
                       const std::vector<std::uint64_t>& nominal,
                       const UnitFn& process, const DevScorer& dev,
                       const ProgressSink& progress) {
  std::uint64_t nominal_epoch = 0;
  for (auto u : order) nominal_epoch += nominal[u];
  const double planned =
      static_cast<double>(nominal_epoch) * static_cast<double>(cfg.max_epochs);
  const double lr0 = cfg.learning_rate;
  const auto lr_at = [&](double done) {
    if (planned <= 0.0) return static_cast<float>(lr0);
    return static_cast<float>(lr0 * std::max(0.0, 1.0 - done / planned));
  };

  TrainResult result;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  StepScratch scratch;
  double done = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  int epochs_without_gain = 0;
  const int workers = kernels::resolve_threads(cfg.threads);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    std::uint64_t examples = 0;
    if (workers <= 1) {
      for (auto unit : order) {
        const UnitOutcome o = process(unit, lr_at(done), rng, scratch);
        done += static_cast<double>(nominal[unit]);
        loss += o.loss;
        examples += o.examples;
      }
    } else {
      // Asynchronous updates on the shared matrices; races between workers
      // are tolerated and the result is not reproducible.
      const auto n = static_cast<std::int64_t>(order.size());
      const double epoch_start = done;
#pragma omp parallel num_threads(workers) reduction(+ : loss, examples)
      {
#ifdef _OPENMP
        const int tid = omp_get_thread_num();
        const int nt = omp_get_num_threads();
#else
        const int tid = 0;
        const int nt = 1;
#endif
        Rng local(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(epoch) +
                  static_cast<std::uint64_t>(tid));
        StepScratch local_scratch;
        double local_done = 0.0;
        const std::int64_t begin = n * tid / nt;
        const std::int64_t end = n * (tid + 1) / nt;
        for (std::int64_t i = begin; i < end; ++i) {
          const auto unit = order[static_cast<std::size_t>(i)];
          const UnitOutcome o = process(
              unit, lr_at(epoch_start + local_done * nt), local, local_scratch);
          local_done += static_cast<double>(nominal[unit]);
          loss += o.loss;
          examples += o.examples;
        }
      }
      done = epoch_start + static_cast<double>(nominal_epoch);
    }

    EpochReport report;
    report.epoch = epoch;
    report.examples = examples;
    report.mean_loss = examples ? loss / static_cast<double>(examples) : 0.0;
    if (dev) report.dev_recall = dev(model);
    result.history.push_back(report);
    if (progress) progress(report);

    if (dev) {
      if (*report.dev_recall > best_score) {
        best_score = *report.dev_recall;
        result.model = model;
        result.best_epoch = epoch;
        epochs_without_gain = 0;
      } else if (++epochs_without_gain >= cfg.early_stop_patience) {
        spdlog::info("early stop after epoch {} (best epoch {})", epoch,
                     result.best_epoch);
        break;
      }
    }
  }
  if (!dev) {
    result.model = std::move(model);
    result.best_epoch = static_cast<int>(result.history.size());
  }
  if (!result.model.all_finite()) {
    throw Error("training diverged: non-finite embedding entries");
  }
  return result;
}

}  // namespace

TrainResult train_pairs(const PairDataset& pairs, const TrainConfig& cfg,
                        const DevScorer& dev, const ProgressSink& progress) {
  cfg.validate(false);
  if (pairs.empty()) throw ConfigError("cannot train on an empty pair dataset");

  DualEmbedding model = init_model(pairs.items(), static_cast<std::size_t>(cfg.dim),
                                   cfg.seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> units;
  std::vector<std::uint32_t> order;
  std::vector<std::uint64_t> counts(model.size(), 0);
  std::size_t clamped = 0;
  units.reserve(pairs.size());
  for (const auto& r : pairs.records()) {
    const auto a = *model.row_of(r.item_a);
    const auto b = *model.row_of(r.item_b);
    std::uint64_t repeats = r.count;
    if (repeats > cfg.max_pair_repeats) {
      repeats = cfg.max_pair_repeats;
      ++clamped;
    }
    const auto unit = static_cast<std::uint32_t>(units.size());
    units.emplace_back(a, b);
    order.insert(order.end(), repeats, unit);
    counts[a] += repeats;
    counts[b] += repeats;
  }
  if (clamped > 0) {
    spdlog::warn("{} pair counts clamped to {} repetitions per epoch", clamped,
                 cfg.max_pair_repeats);
  }
  const NoiseTable noise(counts, cfg.noise_exponent);
  const std::vector<double> keep = keep_table(counts, cfg.subsample_t);
  const std::vector<std::uint64_t> nominal(units.size(), 2);
  const int k = cfg.negatives;

  UnitFn process = [&](std::uint32_t unit, float lr, Rng& rng,
                       StepScratch& scratch) {
    UnitOutcome o;
    const auto [a, b] = units[unit];
    const bool keep_a = keep_occurrence(keep[a], rng);
    const bool keep_b = keep_occurrence(keep[b], rng);
    if (!keep_a || !keep_b) return o;
    o.loss += sgd_step(model, a, b, noise, k, lr, rng, scratch);
    o.loss += sgd_step(model, b, a, noise, k, lr, rng, scratch);
    o.examples = 2;
    return o;
  };
  return run_epochs(model, cfg, std::move(order), nominal, process, dev,
                    progress);
}

TrainResult train_sequences(std::span<const Session> sessions,
                            const TrainConfig& cfg, const DevScorer& dev,
                            const ProgressSink& progress) {
  cfg.validate(true);
  std::vector<ItemId> vocab;
  for (const auto& s : sessions) vocab.insert(vocab.end(), s.items.begin(), s.items.end());
  if (vocab.empty()) throw ConfigError("cannot train on empty sessions");

  DualEmbedding model =
      init_model(std::move(vocab), static_cast<std::size_t>(cfg.dim), cfg.seed);
  std::vector<std::vector<std::uint32_t>> sequences;
  std::vector<std::uint64_t> counts(model.size(), 0);
  std::vector<std::uint64_t> nominal;
  for (const auto& s : sessions) {
    std::vector<std::uint32_t> rows;
    rows.reserve(s.items.size());
    for (const auto& item : s.items) {
      const auto r = *model.row_of(item);
      rows.push_back(r);
      ++counts[r];
    }
    nominal.push_back(window_examples(rows.size(), cfg.window).size());
    sequences.push_back(std::move(rows));
  }
  std::vector<std::uint32_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0u);
  const NoiseTable noise(counts, cfg.noise_exponent);
  const std::vector<double> keep = keep_table(counts, cfg.subsample_t);
  const int k = cfg.negatives;
  const int window = cfg.window;

  UnitFn process = [&](std::uint32_t unit, float lr, Rng& rng,
                       StepScratch& scratch) {
    UnitOutcome o;
    std::vector<std::uint32_t> kept;
    kept.reserve(sequences[unit].size());
    for (auto r : sequences[unit]) {
      if (keep_occurrence(keep[r], rng)) kept.push_back(r);
    }
    for (const auto& [i, j] : window_examples(kept.size(), window)) {
      if (kept[i] == kept[j]) continue;
      o.loss += sgd_step(model, kept[i], kept[j], noise, k, lr, rng, scratch);
      ++o.examples;
    }
    return o;
  };
  return run_epochs(model, cfg, std::move(order), nominal, process, dev,
                    progress);
}

}  // namespace dualrec

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

// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/augment.hpp"
#include "dualrec/kernels.hpp"
#include "dualrec/sgns.hpp"

namespace {

using namespace dualrec;

constexpr std::size_t kDim = 64;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  std::vector<float> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

void BM_ScoreRowsSerial(benchmark::State& state) {
  const auto rows_n = static_cast<std::size_t>(state.range(0));
  const auto rows = random_floats(rows_n * kDim, 1);
  const auto q = random_floats(kDim, 2);
  std::vector<float> scores(rows_n);
  for (auto _ : state) {
    kernels::score_rows_serial(rows, kDim, q, scores);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreRowsParallel(benchmark::State& state) {
  const auto rows_n = static_cast<std::size_t>(state.range(0));
  const auto rows = random_floats(rows_n * kDim, 1);
  const auto q = random_floats(kDim, 2);
  std::vector<float> scores(rows_n);
  for (auto _ : state) {
    kernels::score_rows_parallel(rows, kDim, q, scores, 0);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_ScoreRowsSerial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_ScoreRowsParallel)->Arg(10000)->Arg(100000);

struct AugmentFixture {
  PairDataset pairs;
  DualEmbedding model;
};

const AugmentFixture& augment_fixture() {
  static const AugmentFixture f = [] {
    spdlog::set_level(spdlog::level::warn);
    constexpr int kItems = 2000;
    std::vector<ItemId> vocab;
    for (int i = 0; i < kItems; ++i) vocab.push_back(fmt::format("i{:05d}", i));
    DualEmbedding m(vocab, 32);
    std::mt19937_64 rng(3);
    std::normal_distribution<float> nd;
    for (auto& x : m.input_matrix()) x = nd(rng);
    for (auto& x : m.output_matrix()) x = nd(rng);
    std::vector<PairRecord> recs;
    for (int i = 0; i + 1 < kItems; i += 2) {
      PairRecord r;
      r.item_a = vocab[static_cast<std::size_t>(i)];
      r.item_b = vocab[static_cast<std::size_t>(i + 1)];
      r.count = 10 + rng() % 50;
      recs.push_back(r);
    }
    return AugmentFixture{PairDataset::from_records(recs), std::move(m)};
  }();
  return f;
}

void BM_AugmentSerial(benchmark::State& state) {
  const auto& f = augment_fixture();
  const EmbeddingSimilarity sim(f.model);
  AugmentConfig cfg;
  cfg.min_similarity = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(augment_dataset_serial(f.pairs, sim, cfg));
}

void BM_AugmentParallel(benchmark::State& state) {
  const auto& f = augment_fixture();
  const EmbeddingSimilarity sim(f.model);
  AugmentConfig cfg;
  cfg.min_similarity = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(augment_dataset(f.pairs, sim, cfg));
}

BENCHMARK(BM_AugmentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AugmentParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

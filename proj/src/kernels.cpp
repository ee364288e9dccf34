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

#include "dualrec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dualrec::kernels {

int resolve_threads(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

float normalize(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (norm > 0.0) {
    const auto inv = static_cast<float>(1.0 / norm);
    for (float& x : v) x *= inv;
  }
  return static_cast<float>(norm);
}

void score_rows_serial(std::span<const float> rows, std::size_t dim,
                       std::span<const float> query, std::span<float> scores) {
  const std::size_t n = scores.size();
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = dot(rows.data() + i * dim, query.data(), dim);
  }
}

void score_rows_parallel(std::span<const float> rows, std::size_t dim,
                         std::span<const float> query, std::span<float> scores,
                         int threads) {
  const auto n = static_cast<std::int64_t>(scores.size());
  const int workers = resolve_threads(threads);
  (void)workers;
#pragma omp parallel for num_threads(workers) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    scores[i] = dot(rows.data() + i * dim, query.data(), dim);
  }
}

std::vector<std::uint32_t> top_k(std::span<const float> scores, std::size_t k,
                                 std::optional<std::uint32_t> exclude) {
  std::vector<std::uint32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  if (exclude && *exclude < idx.size()) {
    idx.erase(idx.begin() + *exclude);
  }
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), better);
  idx.resize(k);
  return idx;
}

}  // namespace dualrec::kernels

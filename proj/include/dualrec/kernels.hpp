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

// Dense vector kernels. Every parallel kernel has a serial twin that is the
// reference in tests; the parallel version must produce identical results.

#ifndef DUALREC_KERNELS_HPP_
#define DUALREC_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dualrec::kernels {

/// Number of OpenMP workers for a request; <= 0 means all available.
/// Always 1 in builds without OpenMP.
int resolve_threads(int requested);

inline float dot(const float* a, const float* b, std::size_t dim) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < dim; ++i) sum += a[i] * b[i];
  return sum;
}

inline void axpy(float alpha, const float* x, float* y, std::size_t dim) {
  for (std::size_t i = 0; i < dim; ++i) y[i] += alpha * x[i];
}

/// Scales v to unit length in place; returns the original norm.
float normalize(std::span<float> v);

/// scores[i] = <rows[i], query> for a row-major matrix.
void score_rows_serial(std::span<const float> rows, std::size_t dim,
                       std::span<const float> query, std::span<float> scores);
void score_rows_parallel(std::span<const float> rows, std::size_t dim,
                         std::span<const float> query, std::span<float> scores,
                         int threads);

/// Indices of the k best scores, descending, ties by ascending index.
std::vector<std::uint32_t> top_k(std::span<const float> scores, std::size_t k,
                                 std::optional<std::uint32_t> exclude);

}  // namespace dualrec::kernels

#endif  // DUALREC_KERNELS_HPP_

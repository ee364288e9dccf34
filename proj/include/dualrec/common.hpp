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

#ifndef DUALREC_COMMON_HPP_
#define DUALREC_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace dualrec {

/// Opaque product identifier. Items are totally ordered by byte-wise
/// string comparison; that order defines canonical pairs and tie breaks.
using ItemId = std::string;

/// An item together with a real-valued score (cosine, similarity, ...).
struct Scored {
  ItemId item;
  double score = 0.0;

  friend bool operator==(const Scored&, const Scored&) = default;
};

// Error hierarchy. The CLI maps ConfigError to exit code 2, InputError to 3
// and everything else to 1.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// Corpus is readable but unusable (e.g. mostly malformed).
class CorpusError : public Error {
 public:
  using Error::Error;
};

/// A numeric function was called outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The item has no representation in the model (cold start).
class OutOfCoverage : public Error {
 public:
  explicit OutOfCoverage(ItemId item)
      : Error("item out of coverage: " + item), item_(std::move(item)) {}
  const ItemId& item() const noexcept { return item_; }

 private:
  ItemId item_;
};

class TuningError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualrec

#endif  // DUALREC_COMMON_HPP_

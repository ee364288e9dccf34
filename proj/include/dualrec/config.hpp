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

// Flat key=value run configuration and run manifests.

#ifndef DUALREC_CONFIG_HPP_
#define DUALREC_CONFIG_HPP_

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualrec/augment.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/sgns.hpp"
#include "dualrec/synth.hpp"

namespace dualrec {

inline constexpr std::string_view kVersion = "0.1.0";

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every recognised key with its default.
std::span<const ConfigKey> config_keys();

/// Resolved configuration. Starts from the defaults; unknown keys are
/// rejected with ConfigError.
class Config {
 public:
  Config();

  /// `key = value` lines, '#' comments.
  void parse(std::istream& in);
  void load(const std::string& path);  // InputError if unreadable
  void set(std::string_view key, std::string_view value);
  /// "key=value" form used by --set.
  void set_assignment(std::string_view assignment);

  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::vector<std::size_t> get_list(std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& values() const {
    return values_;
  }
  nlohmann::json to_json() const;
  /// Same `key = value` text accepted by parse().
  std::string to_text() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

TrainConfig make_train_config(const Config& config);
FilterConfig make_filter_config(const Config& config);
AugmentConfig make_augment_config(const Config& config);
AnnConfig make_ann_config(const Config& config);
WorldConfig make_world_config(const Config& config);

/// Provenance record written next to every artifact.
class RunManifest {
 public:
  RunManifest(std::string subcommand, const Config& config);

  void add_input(const std::string& role, const std::string& path);
  void add_output(const std::string& role, const std::string& path);
  void set_field(const std::string& key, nlohmann::json value);

  nlohmann::json to_json() const;
  /// Writes `<path>` and returns it.
  std::string write(const std::string& path) const;

 private:
  std::string subcommand_;
  nlohmann::json config_;
  std::uint64_t seed_;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
};

}  // namespace dualrec

#endif  // DUALREC_CONFIG_HPP_

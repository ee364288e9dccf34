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

#include "dualrec/config.hpp"

#include <array>
#include <fstream>
#include <limits>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "dualrec/model_io.hpp"
#include "dualrec/text.hpp"

namespace dualrec {

namespace {

constexpr std::array kKeys{
    ConfigKey{"seed", "1", "master seed for training, splits and sampling"},
    ConfigKey{"threads", "1", "worker threads; 1 = deterministic serial paths, 0 = all cores"},
    ConfigKey{"train.negatives", "5", "negative samples per positive example"},
    ConfigKey{"train.noise_exponent", "0.75", "noise distribution exponent alpha"},
    ConfigKey{"train.subsample_t", "1e-3", "subsampling threshold t; 'inf' disables"},
    ConfigKey{"train.learning_rate", "0.05", "initial learning rate, decays linearly to 0"},
    ConfigKey{"train.dim", "100", "embedding dimension"},
    ConfigKey{"train.window", "5", "context window (sequence mode)"},
    ConfigKey{"train.max_epochs", "10", "epoch budget"},
    ConfigKey{"train.patience", "3", "epochs without dev improvement before stopping"},
    ConfigKey{"train.max_pair_repeats", "1000", "per-epoch repetition cap of one pair"},
    ConfigKey{"train.dev_fraction", "0", "held-out pair fraction for early stopping; 0 = off"},
    ConfigKey{"filter.user_quantile", "0.999", "drop users above this distinct-item quantile"},
    ConfigKey{"filter.session_quantile", "0.999", "drop sessions above this size quantile"},
    ConfigKey{"filter.min_pair_count", "3", "minimum co-occurrence count of a pair"},
    ConfigKey{"filter.min_product_pmi", "0", "minimum product-level PMI"},
    ConfigKey{"filter.min_taxonomy_pmi", "0", "minimum taxonomy-level PMI"},
    ConfigKey{"augment.gamma", "0.5", "synthetic count discount"},
    ConfigKey{"augment.k", "3", "similar items per pair member"},
    ConfigKey{"augment.theta", "0.6", "minimum similarity in [0, 1]"},
    ConfigKey{"ann.M", "16", "graph degree"},
    ConfigKey{"ann.ef_construction", "200", "build beam width"},
    ConfigKey{"ann.ef_search", "100", "query beam width"},
    ConfigKey{"eval.ks", "20,50", "evaluation cutoffs"},
    ConfigKey{"eval.min_pair_count", "1", "minimum test pair count for ground truth"},
    ConfigKey{"tune.dev_fraction", "0.1", "held-out pair fraction for tuning"},
    ConfigKey{"synth.n_categories", "20", "categories"},
    ConfigKey{"synth.items_per_category", "50", "items per category"},
    ConfigKey{"synth.complements_per_category", "3", "graph degree target"},
    ConfigKey{"synth.popularity_skew", "1.0", "Zipf exponent of purchases"},
    ConfigKey{"synth.n_purchase_sessions", "50000", "training purchase sessions"},
    ConfigKey{"synth.n_click_sessions", "20000", "click sessions"},
    ConfigKey{"synth.n_test_sessions", "10000", "test purchase sessions"},
    ConfigKey{"synth.basket_extra_mean", "1.5", "Poisson mean of items beyond two"},
    ConfigKey{"synth.basket_max", "8", "largest basket"},
    ConfigKey{"synth.same_category_rate", "0.1", "chance an extra basket item repeats a category"},
    ConfigKey{"synth.noise_rate", "0.05", "share of random two-item sessions"},
    ConfigKey{"synth.holdout_item_fraction", "0", "items kept out of training purchases"},
    ConfigKey{"synth.click_skew", "0.5", "Zipf exponent of clicks"},
    ConfigKey{"synth.click_switch_rate", "0.1", "per-click category switch probability"},
};

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

Config::Config() {
  for (const auto& k : kKeys) values_.emplace(k.name, k.default_value);
}

void Config::set(std::string_view key, std::string_view value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  it->second = std::string(trim(value));
}

void Config::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(fmt::format("expected key=value, got '{}'", assignment));
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::parse(std::istream& in) {
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
    try {
      set_assignment(body);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
}

void Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  parse(in);
}

const std::string& Config::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  return it->second;
}

double Config::get_double(std::string_view key) const {
  const auto& text = get(key);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  if (!parse_number(std::string_view(text), v)) {
    throw ConfigError(fmt::format("{} = '{}' is not a number", key, text));
  }
  return v;
}

std::int64_t Config::get_int(std::string_view key) const {
  std::int64_t v = 0;
  if (!parse_number(std::string_view(get(key)), v)) {
    throw ConfigError(fmt::format("{} = '{}' is not an integer", key, get(key)));
  }
  return v;
}

std::uint64_t Config::get_uint(std::string_view key) const {
  const auto v = get_int(key);
  if (v < 0) throw ConfigError(fmt::format("{} must be >= 0", key));
  return static_cast<std::uint64_t>(v);
}

std::vector<std::size_t> Config::get_list(std::string_view key) const {
  std::vector<std::size_t> out;
  for (const auto part : split(get(key), ',')) {
    std::size_t v = 0;
    if (!parse_number(trim(part), v)) {
      throw ConfigError(fmt::format("{} = '{}' is not an integer list", key, get(key)));
    }
    out.push_back(v);
  }
  return out;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

namespace {

int as_int(const Config& c, std::string_view key) {
  const auto v = c.get_int(key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(fmt::format("{} out of range", key));
  }
  return static_cast<int>(v);
}

}  // namespace

TrainConfig make_train_config(const Config& c) {
  TrainConfig cfg;
  cfg.negatives = as_int(c, "train.negatives");
  cfg.noise_exponent = c.get_double("train.noise_exponent");
  cfg.subsample_t = c.get_double("train.subsample_t");
  cfg.learning_rate = c.get_double("train.learning_rate");
  cfg.dim = as_int(c, "train.dim");
  cfg.window = as_int(c, "train.window");
  cfg.max_epochs = as_int(c, "train.max_epochs");
  cfg.early_stop_patience = as_int(c, "train.patience");
  cfg.max_pair_repeats = c.get_uint("train.max_pair_repeats");
  cfg.seed = c.get_uint("seed");
  cfg.threads = as_int(c, "threads");
  return cfg;
}

FilterConfig make_filter_config(const Config& c) {
  FilterConfig cfg;
  cfg.user_quantile = c.get_double("filter.user_quantile");
  cfg.session_quantile = c.get_double("filter.session_quantile");
  cfg.min_pair_count = c.get_uint("filter.min_pair_count");
  cfg.min_product_pmi = c.get_double("filter.min_product_pmi");
  cfg.min_taxonomy_pmi = c.get_double("filter.min_taxonomy_pmi");
  cfg.validate();
  return cfg;
}

AugmentConfig make_augment_config(const Config& c) {
  AugmentConfig cfg;
  cfg.gamma = c.get_double("augment.gamma");
  const auto k = c.get_int("augment.k");
  if (k < 1) throw ConfigError("augment.k must be >= 1");
  cfg.k_similar = static_cast<std::size_t>(k);
  cfg.min_similarity = c.get_double("augment.theta");
  cfg.threads = as_int(c, "threads");
  cfg.validate();
  return cfg;
}

AnnConfig make_ann_config(const Config& c) {
  AnnConfig cfg;
  cfg.graph_degree = c.get_uint("ann.M");
  cfg.ef_construction = c.get_uint("ann.ef_construction");
  cfg.ef_search = c.get_uint("ann.ef_search");
  cfg.seed = c.get_uint("seed");
  cfg.validate();
  return cfg;
}

WorldConfig make_world_config(const Config& c) {
  WorldConfig cfg;
  cfg.n_categories = as_int(c, "synth.n_categories");
  cfg.items_per_category = as_int(c, "synth.items_per_category");
  cfg.complements_per_category = as_int(c, "synth.complements_per_category");
  cfg.popularity_skew = c.get_double("synth.popularity_skew");
  cfg.n_purchase_sessions = c.get_uint("synth.n_purchase_sessions");
  cfg.n_click_sessions = c.get_uint("synth.n_click_sessions");
  cfg.n_test_sessions = c.get_uint("synth.n_test_sessions");
  cfg.basket_extra_mean = c.get_double("synth.basket_extra_mean");
  cfg.basket_max = as_int(c, "synth.basket_max");
  cfg.same_category_rate = c.get_double("synth.same_category_rate");
  cfg.noise_rate = c.get_double("synth.noise_rate");
  cfg.holdout_item_fraction = c.get_double("synth.holdout_item_fraction");
  cfg.click_skew = c.get_double("synth.click_skew");
  cfg.click_switch_rate = c.get_double("synth.click_switch_rate");
  cfg.seed = c.get_uint("seed");
  cfg.validate();
  return cfg;
}

RunManifest::RunManifest(std::string subcommand, const Config& config)
    : subcommand_(std::move(subcommand)),
      config_(config.to_json()),
      seed_(config.get_uint("seed")),
      started_(std::chrono::system_clock::now()),
      clock_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  inputs_[role] = {{"path", path}, {"sha256", fingerprint_file(path)}};
}

void RunManifest::add_output(const std::string& role, const std::string& path) {
  outputs_[role] = {{"path", path}, {"sha256", fingerprint_file(path)}};
}

void RunManifest::set_field(const std::string& key, nlohmann::json value) {
  extra_[key] = std::move(value);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand_;
  j["version"] = std::string(kVersion);
  j["seed"] = seed_;
  j["config"] = config_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["started_utc"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(
      std::chrono::system_clock::to_time_t(started_)));
  j["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
  if (!extra_.empty()) j["details"] = extra_;
  return j;
}

std::string RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest: " + path);
  out << to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing manifest: " + path);
  return path;
}

}  // namespace dualrec

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

#include "dualrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dualrec/text.hpp"

namespace dualrec {

std::string_view to_string(Channel channel) {
  return channel == Channel::kPurchase ? "purchase" : "click";
}

std::optional<Channel> parse_channel(std::string_view text) {
  if (text == "purchase") return Channel::kPurchase;
  if (text == "click") return Channel::kClick;
  return std::nullopt;
}

std::vector<ItemId> Session::distinct_items() const {
  std::vector<ItemId> out;
  std::unordered_set<std::string_view> seen;
  out.reserve(items.size());
  for (const auto& item : items) {
    if (seen.insert(item).second) out.push_back(item);
  }
  return out;
}

SessionSet parse_sessions(std::istream& in) {
  if (!in) throw InputError("session stream is not readable");
  SessionSet set;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_blank(line)) continue;
    ++set.line_count;
    const auto fields = split(line, '\t');
    std::optional<Channel> channel;
    if (fields.size() == 4) channel = parse_channel(fields[2]);
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty() ||
        !channel || fields[3].empty()) {
      ++set.malformed_count;
      continue;
    }
    Session session;
    session.user_id = std::string(fields[0]);
    session.session_id = std::string(fields[1]);
    session.channel = *channel;
    bool ok = true;
    for (auto item : split(fields[3], ',')) {
      if (item.empty()) {
        ok = false;
        break;
      }
      session.items.emplace_back(item);
    }
    if (!ok || session.items.empty()) {
      ++set.malformed_count;
      continue;
    }
    set.sessions.push_back(std::move(session));
  }
  if (in.bad()) throw InputError("error while reading session stream");
  if (set.line_count == 0) {
    spdlog::warn("session stream is empty");
  } else if (set.malformed_count > 0) {
    spdlog::warn("skipped {} malformed session lines of {}",
                 set.malformed_count, set.line_count);
  }
  if (2 * set.malformed_count > set.line_count) {
    throw CorpusError(fmt::format("{} of {} session lines are malformed",
                                  set.malformed_count, set.line_count));
  }
  return set;
}

SessionSet load_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sessions file: " + path);
  return parse_sessions(in);
}

void write_sessions(std::ostream& out, std::span<const Session> sessions) {
  for (const auto& s : sessions) {
    out << s.user_id << '\t' << s.session_id << '\t' << to_string(s.channel)
        << '\t';
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i) out << ',';
      out << s.items[i];
    }
    out << '\n';
  }
}

std::vector<Session> select_channel(std::span<const Session> sessions,
                                    Channel channel) {
  std::vector<Session> out;
  for (const auto& s : sessions) {
    if (s.channel == channel) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

std::string CatalogEntry::taxonomy_key() const {
  std::string key;
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    if (i) key += '>';
    key += taxonomy[i];
  }
  return key;
}

void Catalog::add(CatalogEntry entry) {
  if (entry.taxonomy.empty()) {
    throw ConfigError("catalog entry without taxonomy: " + entry.item_id);
  }
  if (by_id_.contains(entry.item_id)) {
    throw ConfigError("duplicate catalog item: " + entry.item_id);
  }
  by_id_.emplace(entry.item_id, entries_.size());
  taxonomy_keys_.emplace(entry.item_id, entry.taxonomy_key());
  entries_.push_back(std::move(entry));
}

const CatalogEntry* Catalog::find(const ItemId& item) const {
  auto it = by_id_.find(item);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const std::string* Catalog::taxonomy_of(const ItemId& item) const {
  auto it = taxonomy_keys_.find(item);
  return it == taxonomy_keys_.end() ? nullptr : &it->second;
}

std::set<std::string> Catalog::taxonomies() const {
  std::set<std::string> out;
  for (const auto& [item, key] : taxonomy_keys_) out.insert(key);
  return out;
}

Catalog parse_catalog(std::istream& in) {
  if (!in) throw InputError("catalog stream is not readable");
  Catalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() ||
        fields[1].empty()) {
      throw InputError(fmt::format("malformed catalog line {}", line_no));
    }
    CatalogEntry entry;
    entry.item_id = std::string(fields[0]);
    for (auto segment : split(fields[1], '>')) {
      if (segment.empty()) {
        throw InputError(
            fmt::format("empty taxonomy segment on catalog line {}", line_no));
      }
      entry.taxonomy.emplace_back(segment);
    }
    if (fields.size() == 3) entry.title = std::string(fields[2]);
    try {
      catalog.add(std::move(entry));
    } catch (const ConfigError& e) {
      throw InputError(fmt::format("catalog line {}: {}", line_no, e.what()));
    }
  }
  if (in.bad()) throw InputError("error while reading catalog stream");
  return catalog;
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open catalog file: " + path);
  return parse_catalog(in);
}

void write_catalog(std::ostream& out, const Catalog& catalog) {
  for (const auto& e : catalog.entries()) {
    out << e.item_id << '\t' << e.taxonomy_key() << '\t' << e.title << '\n';
  }
}

std::set<std::string> parse_exception_list(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (!is_blank(line)) out.insert(line);
  }
  return out;
}

std::set<std::string> load_exception_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open exception list: " + path);
  return parse_exception_list(in);
}

// ---------------------------------------------------------------------------
// Pairs

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kReal:
      return "real";
    case Provenance::kSyntheticSingle:
      return "synthetic_single";
    case Provenance::kSyntheticBoth:
      return "synthetic_both";
  }
  return "real";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
  if (text == "real") return Provenance::kReal;
  if (text == "synthetic_single") return Provenance::kSyntheticSingle;
  if (text == "synthetic_both") return Provenance::kSyntheticBoth;
  return std::nullopt;
}

PairKey canonical_pair(const ItemId& a, const ItemId& b) {
  if (a == b) throw DomainError("self pair: " + a);
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

std::size_t PairKeyHash::operator()(const PairKey& key) const noexcept {
  const std::size_t h1 = std::hash<std::string>{}(key.first);
  const std::size_t h2 = std::hash<std::string>{}(key.second);
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

PairDataset PairDataset::from_records(std::vector<PairRecord> records) {
  for (auto& r : records) {
    if (r.item_a == r.item_b) throw ConfigError("self pair: " + r.item_a);
    if (r.item_b < r.item_a) std::swap(r.item_a, r.item_b);
  }
  std::sort(records.begin(), records.end(),
            [](const PairRecord& x, const PairRecord& y) {
              return std::tie(x.item_a, x.item_b) < std::tie(y.item_a, y.item_b);
            });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].item_a == records[i - 1].item_a &&
        records[i].item_b == records[i - 1].item_b) {
      throw ConfigError(fmt::format("duplicate pair ({}, {})",
                                    records[i].item_a, records[i].item_b));
    }
  }
  PairDataset out;
  out.records_ = std::move(records);
  return out;
}

const PairRecord* PairDataset::find(const ItemId& a, const ItemId& b) const {
  if (a == b) return nullptr;
  const auto& lo = a < b ? a : b;
  const auto& hi = a < b ? b : a;
  auto it = std::lower_bound(
      records_.begin(), records_.end(), std::tie(lo, hi),
      [](const PairRecord& r, const auto& key) {
        return std::tie(r.item_a, r.item_b) < key;
      });
  if (it != records_.end() && it->item_a == lo && it->item_b == hi) return &*it;
  return nullptr;
}

std::vector<ItemId> PairDataset::items() const {
  std::vector<ItemId> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    out.push_back(r.item_a);
    out.push_back(r.item_b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t PairDataset::total_count() const {
  std::uint64_t total = 0;
  for (const auto& r : records_) total += r.count;
  return total;
}

void write_pairs(std::ostream& out, const PairDataset& pairs) {
  for (const auto& r : pairs.records()) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\n", r.item_a, r.item_b, r.count,
                       r.pmi, to_string(r.provenance));
  }
}

PairDataset parse_pairs(std::istream& in) {
  if (!in) throw InputError("pair stream is not readable");
  std::vector<PairRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto fields = split(line, '\t');
    PairRecord r;
    std::optional<Provenance> provenance;
    bool ok = fields.size() == 5 && !fields[0].empty() && !fields[1].empty();
    if (ok) {
      r.item_a = std::string(fields[0]);
      r.item_b = std::string(fields[1]);
      ok = parse_number(fields[2], r.count) && parse_number(fields[3], r.pmi);
      provenance = parse_provenance(fields[4]);
    }
    if (!ok || !provenance || r.item_a == r.item_b) {
      throw InputError(fmt::format("malformed pair line {}", line_no));
    }
    r.provenance = *provenance;
    records.push_back(std::move(r));
  }
  if (in.bad()) throw InputError("error while reading pair stream");
  try {
    return PairDataset::from_records(std::move(records));
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  }
}

PairDataset load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pairs file: " + path);
  return parse_pairs(in);
}

std::uint64_t PairStats::item_count(const ItemId& item) const {
  auto it = item_counts.find(item);
  return it == item_counts.end() ? 0 : it->second;
}

std::uint64_t PairStats::pair_count(const ItemId& a, const ItemId& b) const {
  if (a == b) return 0;
  auto it = pair_counts.find(canonical_pair(a, b));
  return it == pair_counts.end() ? 0 : it->second;
}

void FilterConfig::validate() const {
  if (!(user_quantile > 0.0 && user_quantile <= 1.0)) {
    throw ConfigError("user_quantile must be in (0, 1]");
  }
  if (!(session_quantile > 0.0 && session_quantile <= 1.0)) {
    throw ConfigError("session_quantile must be in (0, 1]");
  }
  if (min_pair_count < 1) throw ConfigError("min_pair_count must be >= 1");
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SessionSet filter_outliers(const SessionSet& sessions, const FilterConfig& cfg) {
  cfg.validate();
  SessionSet out;
  out.malformed_count = sessions.malformed_count;
  out.line_count = sessions.line_count;
  if (sessions.sessions.empty()) return out;

  std::map<std::string, std::unordered_set<std::string>> per_user;
  for (const auto& s : sessions.sessions) {
    auto& items = per_user[s.user_id];
    items.insert(s.items.begin(), s.items.end());
  }
  std::vector<double> user_counts;
  user_counts.reserve(per_user.size());
  for (const auto& [user, items] : per_user) {
    user_counts.push_back(static_cast<double>(items.size()));
  }
  const double user_limit = empirical_quantile(user_counts, cfg.user_quantile);

  std::vector<const Session*> kept;
  for (const auto& s : sessions.sessions) {
    if (static_cast<double>(per_user[s.user_id].size()) <= user_limit) {
      kept.push_back(&s);
    }
  }
  const std::size_t dropped_users = std::count_if(
      per_user.begin(), per_user.end(), [&](const auto& kv) {
        return static_cast<double>(kv.second.size()) > user_limit;
      });
  if (kept.empty()) return out;

  std::vector<double> session_sizes;
  session_sizes.reserve(kept.size());
  for (const auto* s : kept) {
    session_sizes.push_back(static_cast<double>(s->distinct_items().size()));
  }
  const double session_limit =
      empirical_quantile(session_sizes, cfg.session_quantile);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (session_sizes[i] <= session_limit) out.sessions.push_back(*kept[i]);
  }
  spdlog::info(
      "outlier filter: {} users above {:.3f} distinct items, {} of {} "
      "sessions kept",
      dropped_users, user_limit, out.sessions.size(), sessions.sessions.size());
  return out;
}

double compute_pmi(std::uint64_t n_i, std::uint64_t n_j, std::uint64_t n_ij,
                   std::uint64_t total) {
  if (n_i == 0 || n_j == 0 || n_ij == 0 || total == 0) {
    throw DomainError("PMI undefined for zero counts");
  }
  const double t = static_cast<double>(total);
  const double joint = static_cast<double>(n_ij) / t;
  const double pi = static_cast<double>(n_i) / t;
  const double pj = static_cast<double>(n_j) / t;
  return std::log(joint / (pi * pj));
}

double compute_pmi(const PairStats& stats, const ItemId& a, const ItemId& b) {
  return compute_pmi(stats.item_count(a), stats.item_count(b),
                     stats.pair_count(a, b), stats.total_sessions);
}

PairBuild build_pairs(std::span<const Session> sessions) {
  PairBuild out;
  out.stats.total_sessions = sessions.size();
  for (const auto& s : sessions) {
    auto items = s.distinct_items();
    std::sort(items.begin(), items.end());
    for (const auto& item : items) ++out.stats.item_counts[item];
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        ++out.stats.pair_counts[PairKey{items[i], items[j]}];
      }
    }
  }
  std::vector<PairRecord> records;
  records.reserve(out.stats.pair_counts.size());
  for (const auto& [key, count] : out.stats.pair_counts) {
    PairRecord r;
    r.item_a = key.first;
    r.item_b = key.second;
    r.count = count;
    r.pmi = compute_pmi(out.stats.item_count(key.first),
                        out.stats.item_count(key.second), count,
                        out.stats.total_sessions);
    records.push_back(std::move(r));
  }
  out.pairs = PairDataset::from_records(std::move(records));
  return out;
}

// ---------------------------------------------------------------------------
// Taxonomy statistics and filtering

std::optional<double> TaxonomyPairStats::pmi(const std::string& a,
                                             const std::string& b) const {
  const PairKey key = a < b ? PairKey{a, b} : PairKey{b, a};
  auto it = pair_counts.find(key);
  if (it == pair_counts.end() || it->second == 0) return std::nullopt;
  return compute_pmi(taxonomy_counts.at(a), taxonomy_counts.at(b), it->second,
                     total);
}

std::vector<std::pair<std::string, std::uint64_t>>
TaxonomyPairStats::self_pairs() const {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& [key, count] : pair_counts) {
    if (key.first == key.second) out.emplace_back(key.first, count);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.second > y.second;
  });
  return out;
}

TaxonomyPairStats build_taxonomy_pairs(const PairDataset& pairs,
                                       const Catalog& catalog) {
  TaxonomyPairStats stats;
  for (const auto& r : pairs.records()) {
    const auto* ta = catalog.taxonomy_of(r.item_a);
    const auto* tb = catalog.taxonomy_of(r.item_b);
    if (!ta || !tb) continue;
    const PairKey key = *ta < *tb ? PairKey{*ta, *tb} : PairKey{*tb, *ta};
    stats.pair_counts[key] += r.count;
    stats.taxonomy_counts[*ta] += r.count;
    if (*ta != *tb) stats.taxonomy_counts[*tb] += r.count;
    stats.total += r.count;
  }
  return stats;
}

TaxonomyVerdict TaxonomyFilter::check(const ItemId& a, const ItemId& b) const {
  const auto* ta = catalog.taxonomy_of(a);
  const auto* tb = catalog.taxonomy_of(b);
  if (!ta || !tb) return TaxonomyVerdict::kMissingFromCatalog;
  if (*ta == *tb && !cfg.taxonomy_exception_list.contains(*ta)) {
    return TaxonomyVerdict::kIdenticalTaxonomy;
  }
  const auto pmi = stats.pmi(*ta, *tb);
  if (!pmi) return TaxonomyVerdict::kUnknownTaxonomyPair;
  if (*pmi < cfg.min_taxonomy_pmi) return TaxonomyVerdict::kLowTaxonomyPmi;
  return TaxonomyVerdict::kPass;
}

PairDataset filter_pairs(const PairDataset& pairs, const Catalog& catalog,
                         const FilterConfig& cfg,
                         const TaxonomyPairStats& taxonomy_stats,
                         PairFilterReport* report) {
  cfg.validate();
  PairFilterReport local;
  const TaxonomyFilter taxonomy{catalog, taxonomy_stats, cfg};
  std::vector<PairRecord> kept;
  for (const auto& r : pairs.records()) {
    if (r.count < cfg.min_pair_count) {
      ++local.below_count;
      continue;
    }
    if (r.pmi < cfg.min_product_pmi) {
      ++local.below_pmi;
      continue;
    }
    switch (taxonomy.check(r.item_a, r.item_b)) {
      case TaxonomyVerdict::kPass:
        break;
      case TaxonomyVerdict::kMissingFromCatalog:
        ++local.missing_from_catalog;
        break;
      case TaxonomyVerdict::kIdenticalTaxonomy:
        ++local.identical_taxonomy;
        continue;
      case TaxonomyVerdict::kLowTaxonomyPmi:
      case TaxonomyVerdict::kUnknownTaxonomyPair:
        ++local.low_taxonomy_pmi;
        continue;
    }
    kept.push_back(r);
  }
  local.kept = kept.size();
  if (local.missing_from_catalog > 0) {
    spdlog::warn("{} pairs reference items missing from the catalog; kept "
                 "without taxonomy filtering",
                 local.missing_from_catalog);
  }
  spdlog::info(
      "pair filter: kept {} of {} (count {}, pmi {}, same taxonomy {}, "
      "taxonomy pmi {})",
      local.kept, pairs.size(), local.below_count, local.below_pmi,
      local.identical_taxonomy, local.low_taxonomy_pmi);
  if (report) *report = local;
  return PairDataset::from_records(std::move(kept));
}

}  // namespace dualrec

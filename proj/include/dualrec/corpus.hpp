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

// Session ingestion, outlier filtering and co-purchase pair mining.
//
// Raw sessions are turned into an unordered pair dataset with aggregated
// counts. Item counts n_i and pair counts n_ij both count sessions, and T is
// the number of sessions, so PMI(i, j) = ln(n_ij * T / (n_i * n_j)).

#ifndef DUALREC_CORPUS_HPP_
#define DUALREC_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dualrec/common.hpp"

namespace dualrec {

enum class Channel { kPurchase, kClick };

std::string_view to_string(Channel channel);
std::optional<Channel> parse_channel(std::string_view text);

struct Session {
  std::string user_id;
  std::string session_id;
  Channel channel = Channel::kPurchase;
  std::vector<ItemId> items;  // in-session order, duplicates allowed

  /// Items with duplicates removed, first occurrence order kept.
  std::vector<ItemId> distinct_items() const;
};

struct SessionSet {
  std::vector<Session> sessions;
  std::size_t malformed_count = 0;
  std::size_t line_count = 0;  // non-blank lines seen
};

/// Reads `user_id \t session_id \t channel \t item,item,...` records.
/// Malformed lines are counted and skipped. Throws InputError if the stream
/// is unreadable and CorpusError if more than half the lines are malformed.
SessionSet parse_sessions(std::istream& in);
SessionSet load_sessions(const std::string& path);
void write_sessions(std::ostream& out, std::span<const Session> sessions);

/// Sessions of one channel, order preserved.
std::vector<Session> select_channel(std::span<const Session> sessions,
                                    Channel channel);

struct CatalogEntry {
  ItemId item_id;
  std::vector<std::string> taxonomy;  // department first
  std::string title;

  /// Full taxonomy path joined by '>'; the identity used by every
  /// taxonomy-level rule.
  std::string taxonomy_key() const;
};

class Catalog {
 public:
  /// Throws ConfigError on an empty taxonomy path or a duplicate id.
  void add(CatalogEntry entry);

  const CatalogEntry* find(const ItemId& item) const;
  const std::string* taxonomy_of(const ItemId& item) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  std::set<std::string> taxonomies() const;

 private:
  std::vector<CatalogEntry> entries_;
  std::unordered_map<ItemId, std::size_t> by_id_;
  std::unordered_map<ItemId, std::string> taxonomy_keys_;
};

/// `item_id \t a>b>c \t title`. Malformed lines throw InputError.
Catalog parse_catalog(std::istream& in);
Catalog load_catalog(const std::string& path);
void write_catalog(std::ostream& out, const Catalog& catalog);

/// One taxonomy path per line; blank lines ignored.
std::set<std::string> parse_exception_list(std::istream& in);
std::set<std::string> load_exception_list(const std::string& path);

enum class Provenance { kReal, kSyntheticSingle, kSyntheticBoth };

std::string_view to_string(Provenance provenance);
std::optional<Provenance> parse_provenance(std::string_view text);

using PairKey = std::pair<ItemId, ItemId>;

/// (a, b) ordered so that first < second. Throws DomainError when a == b.
PairKey canonical_pair(const ItemId& a, const ItemId& b);

struct PairRecord {
  ItemId item_a;
  ItemId item_b;
  std::uint64_t count = 0;
  double pmi = 0.0;
  Provenance provenance = Provenance::kReal;

  PairKey key() const { return {item_a, item_b}; }
  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

/// Canonical, duplicate-free pair collection sorted by (item_a, item_b).
class PairDataset {
 public:
  PairDataset() = default;

  /// Canonicalises and sorts. Throws ConfigError on self pairs or on a key
  /// that occurs twice.
  static PairDataset from_records(std::vector<PairRecord> records);

  const std::vector<PairRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const PairRecord* find(const ItemId& a, const ItemId& b) const;
  bool contains(const ItemId& a, const ItemId& b) const {
    return find(a, b) != nullptr;
  }
  /// Distinct items appearing in any pair, sorted.
  std::vector<ItemId> items() const;
  std::uint64_t total_count() const;

 private:
  std::vector<PairRecord> records_;
};

/// `item_a \t item_b \t count \t pmi \t provenance`, sorted.
void write_pairs(std::ostream& out, const PairDataset& pairs);
PairDataset parse_pairs(std::istream& in);
PairDataset load_pairs(const std::string& path);

struct PairKeyHash {
  std::size_t operator()(const PairKey& key) const noexcept;
};

struct PairStats {
  std::unordered_map<ItemId, std::uint64_t> item_counts;          // n_i
  std::unordered_map<PairKey, std::uint64_t, PairKeyHash> pair_counts;  // n_ij
  std::uint64_t total_sessions = 0;                               // T

  std::uint64_t item_count(const ItemId& item) const;
  std::uint64_t pair_count(const ItemId& a, const ItemId& b) const;
};

struct FilterConfig {
  double user_quantile = 0.999;
  double session_quantile = 0.999;
  std::uint64_t min_pair_count = 3;
  double min_product_pmi = 0.0;
  double min_taxonomy_pmi = 0.0;
  std::set<std::string> taxonomy_exception_list;

  void validate() const;
};

/// Empirical quantile with linear interpolation between order statistics
/// (position q * (n - 1)). Throws DomainError for empty input or q outside
/// [0, 1].
double empirical_quantile(std::vector<double> values, double q);

/// Removes users whose distinct-item count strictly exceeds the
/// user_quantile, then sessions whose distinct-item count strictly exceeds
/// the session_quantile of the surviving sessions.
SessionSet filter_outliers(const SessionSet& sessions, const FilterConfig& cfg);

struct PairBuild {
  PairDataset pairs;
  PairStats stats;
};

/// All n(n-1)/2 unordered pairs of each session's distinct items, counted
/// across sessions, with product-level PMI filled in.
PairBuild build_pairs(std::span<const Session> sessions);

/// ln((n_ij/T) / ((n_i/T)(n_j/T))). Throws DomainError if any count is 0.
double compute_pmi(std::uint64_t n_i, std::uint64_t n_j, std::uint64_t n_ij,
                   std::uint64_t total);
double compute_pmi(const PairStats& stats, const ItemId& a, const ItemId& b);

/// Taxonomy-level co-occurrence. Each pair occurrence is one observation:
/// the taxonomy pair count is the summed pair count, a taxonomy's count is
/// the summed count of pairs touching it (once, even for self pairs), and
/// the total is the summed count of all mapped pairs.
struct TaxonomyPairStats {
  std::map<PairKey, std::uint64_t> pair_counts;  // canonical, self pairs allowed
  std::map<std::string, std::uint64_t> taxonomy_counts;
  std::uint64_t total = 0;

  std::optional<double> pmi(const std::string& a, const std::string& b) const;
  /// Same-taxonomy pairs sorted by descending count; input for curating
  /// the exception list.
  std::vector<std::pair<std::string, std::uint64_t>> self_pairs() const;
};

TaxonomyPairStats build_taxonomy_pairs(const PairDataset& pairs,
                                       const Catalog& catalog);

enum class TaxonomyVerdict {
  kPass,
  kMissingFromCatalog,  // exempt from taxonomy rules, kept
  kIdenticalTaxonomy,
  kLowTaxonomyPmi,
  kUnknownTaxonomyPair,  // no taxonomy-level evidence at all
};

/// Taxonomy rules shared by real-pair filtering and synthetic pairs.
struct TaxonomyFilter {
  const Catalog& catalog;
  const TaxonomyPairStats& stats;
  const FilterConfig& cfg;

  TaxonomyVerdict check(const ItemId& a, const ItemId& b) const;
};

struct PairFilterReport {
  std::size_t below_count = 0;
  std::size_t below_pmi = 0;
  std::size_t identical_taxonomy = 0;
  std::size_t low_taxonomy_pmi = 0;
  std::size_t missing_from_catalog = 0;
  std::size_t kept = 0;
};

PairDataset filter_pairs(const PairDataset& pairs, const Catalog& catalog,
                         const FilterConfig& cfg,
                         const TaxonomyPairStats& taxonomy_stats,
                         PairFilterReport* report = nullptr);

}  // namespace dualrec

#endif  // DUALREC_CORPUS_HPP_

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

// Hierarchical navigable small world graph over unit vectors.
//
// Distance is 1 - cosine. Layer 0 keeps up to 2M links per node, upper
// layers M. Neighbour lists are chosen with the diversity heuristic: a
// candidate is kept only if it is closer to the base node than to every
// neighbour already kept.

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <random>

#include <fmt/format.h>

#include "dualrec/kernels.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/text.hpp"

namespace dualrec {

namespace {

struct Candidate {
  float dist;
  std::uint32_t node;
};

struct CloserFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.dist > b.dist || (a.dist == b.dist && a.node > b.node);
  }
};

struct FartherFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.dist < b.dist || (a.dist == b.dist && a.node < b.node);
  }
};

// Per-thread visit marks so concurrent searches stay independent.
struct VisitedList {
  std::vector<std::uint32_t> marks;
  std::uint32_t epoch = 0;

  void reset(std::size_t n) {
    if (marks.size() != n) {
      marks.assign(n, 0);
      epoch = 0;
    }
    if (++epoch == 0) {
      std::fill(marks.begin(), marks.end(), 0);
      epoch = 1;
    }
  }
  bool visit(std::uint32_t node) {
    if (marks[node] == epoch) return false;
    marks[node] = epoch;
    return true;
  }
};

VisitedList& thread_visited() {
  thread_local VisitedList visited;
  return visited;
}

void write_raw(std::ostream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  write_raw(out, &v, sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw InputError("truncated ANN index");
  return v;
}

}  // namespace

struct AnnSearch {
  static float distance(const AnnIndex& idx, const float* q, std::uint32_t node) {
    return 1.0f - kernels::dot(q, idx.vectors_.data() + node * idx.dim_, idx.dim_);
  }

  static std::uint32_t greedy(const AnnIndex& idx, const float* q,
                              std::uint32_t ep, int level) {
    float best = distance(idx, q, ep);
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto nb : idx.links_[ep][static_cast<std::size_t>(level)]) {
        const float d = distance(idx, q, nb);
        if (d < best || (d == best && nb < ep)) {
          best = d;
          ep = nb;
          changed = true;
        }
      }
    }
    return ep;
  }

  // Beam search on one layer; returns up to ef nodes, closest first.
  static std::vector<Candidate> layer(const AnnIndex& idx, const float* q,
                                      std::uint32_t ep, std::size_t ef,
                                      int level) {
    auto& visited = thread_visited();
    visited.reset(idx.rows_.size());
    std::priority_queue<Candidate, std::vector<Candidate>, CloserFirst> frontier;
    std::priority_queue<Candidate, std::vector<Candidate>, FartherFirst> best;
    const Candidate start{distance(idx, q, ep), ep};
    visited.visit(ep);
    frontier.push(start);
    best.push(start);
    while (!frontier.empty()) {
      const Candidate c = frontier.top();
      if (c.dist > best.top().dist && best.size() >= ef) break;
      frontier.pop();
      for (auto nb : idx.links_[c.node][static_cast<std::size_t>(level)]) {
        if (!visited.visit(nb)) continue;
        const float d = distance(idx, q, nb);
        if (best.size() < ef || d < best.top().dist) {
          frontier.push({d, nb});
          best.push({d, nb});
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // `candidates` sorted closest first relative to the base vector.
  static std::vector<std::uint32_t> select(const AnnIndex& idx,
                                           const std::vector<Candidate>& candidates,
                                           std::size_t m) {
    std::vector<std::uint32_t> kept;
    for (const auto& c : candidates) {
      if (kept.size() >= m) break;
      const float* cv = idx.vectors_.data() + c.node * idx.dim_;
      bool diverse = true;
      for (auto k : kept) {
        if (distance(idx, cv, k) < c.dist) {
          diverse = false;
          break;
        }
      }
      if (diverse) kept.push_back(c.node);
    }
    return kept;
  }
};

void AnnIndex::init_vectors(const DualEmbedding& model) {
  dim_ = model.dim();
  local_of_.assign(model.size(), -1);
  vectors_.clear();
  vectors_.reserve(rows_.size() * dim_);
  for (std::size_t local = 0; local < rows_.size(); ++local) {
    const auto r = rows_[local];
    const auto row = side_ == MatrixSide::kInput ? model.input_row(r)
                                                 : model.output_row(r);
    const std::size_t at = vectors_.size();
    vectors_.insert(vectors_.end(), row.begin(), row.end());
    if (kernels::normalize(std::span<float>(vectors_.data() + at, dim_)) == 0.0f) {
      throw InputError(fmt::format("ANN index references zero row {}", r));
    }
    local_of_[r] = static_cast<std::int64_t>(local);
  }
}

AnnIndex::AnnIndex(const DualEmbedding& model, MatrixSide side,
                   const AnnConfig& cfg)
    : side_(side), cfg_(cfg) {
  cfg_.validate();
  for (std::uint32_t r = 0; r < model.size(); ++r) {
    const auto row = side == MatrixSide::kInput ? model.input_row(r)
                                                : model.output_row(r);
    if (std::any_of(row.begin(), row.end(), [](float x) { return x != 0.0f; })) {
      rows_.push_back(r);
    }
  }
  if (rows_.size() < 2) {
    throw ConfigError("ANN index needs at least two nonzero rows");
  }
  init_vectors(model);

  Rng rng(cfg_.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double level_scale = 1.0 / std::log(static_cast<double>(cfg_.graph_degree));
  levels_.resize(rows_.size());
  links_.resize(rows_.size());
  for (std::uint32_t node = 0; node < rows_.size(); ++node) {
    const double u = 1.0 - uniform(rng);  // (0, 1]
    const int level = static_cast<int>(std::floor(-std::log(u) * level_scale));
    levels_[node] = level;
    links_[node].resize(static_cast<std::size_t>(level) + 1);
    insert(node, level);
  }
}

void AnnIndex::insert(std::uint32_t node, int level) {
  if (max_level_ < 0) {
    entry_ = node;
    max_level_ = level;
    return;
  }
  const float* q = vectors_.data() + node * dim_;
  std::uint32_t ep = entry_;
  for (int lc = max_level_; lc > level; --lc) ep = AnnSearch::greedy(*this, q, ep, lc);

  for (int lc = std::min(level, max_level_); lc >= 0; --lc) {
    const auto found = AnnSearch::layer(*this, q, ep, cfg_.ef_construction, lc);
    const std::size_t cap = lc == 0 ? 2 * cfg_.graph_degree : cfg_.graph_degree;
    auto neighbours = AnnSearch::select(*this, found, cfg_.graph_degree);
    const auto level_index = static_cast<std::size_t>(lc);
    links_[node][level_index] = neighbours;
    for (auto nb : neighbours) {
      auto& list = links_[nb][level_index];
      list.push_back(node);
      if (list.size() > cap) {
        const float* base = vectors_.data() + nb * dim_;
        std::vector<Candidate> pool;
        pool.reserve(list.size());
        for (auto other : list) pool.push_back({AnnSearch::distance(*this, base, other), other});
        std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
          return a.dist < b.dist || (a.dist == b.dist && a.node < b.node);
        });
        list = AnnSearch::select(*this, pool, cap);
      }
    }
    ep = found.front().node;
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_ = node;
  }
}

std::vector<Neighbor> AnnIndex::exhaustive(
    std::span<const float> query, std::size_t k,
    std::optional<std::uint32_t> exclude) const {
  std::vector<float> scores(rows_.size());
  kernels::score_rows_serial(vectors_, dim_, query, scores);
  std::vector<Neighbor> out;
  for (auto local : kernels::top_k(scores, k, exclude)) {
    out.push_back({rows_[local], std::clamp(scores[local], -1.0f, 1.0f)});
  }
  return out;
}

std::vector<Neighbor> AnnIndex::search(
    std::span<const float> query, std::size_t k,
    std::optional<std::uint32_t> exclude_row) const {
  if (k == 0 || rows_.empty()) return {};
  std::vector<float> q(query.begin(), query.end());
  if (kernels::normalize(q) == 0.0f) return {};
  std::optional<std::uint32_t> exclude;
  if (exclude_row && *exclude_row < local_of_.size() &&
      local_of_[*exclude_row] >= 0) {
    exclude = static_cast<std::uint32_t>(local_of_[*exclude_row]);
  }
  const std::size_t want = k + (exclude ? 1 : 0);
  const std::size_t ef = std::max(cfg_.ef_search, want);
  // A beam covering every node is an exhaustive search.
  if (ef >= rows_.size()) return exhaustive(q, k, exclude);

  std::uint32_t ep = entry_;
  for (int lc = max_level_; lc > 0; --lc) ep = AnnSearch::greedy(*this, q.data(), ep, lc);
  auto found = AnnSearch::layer(*this, q.data(), ep, ef, 0);

  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (const auto& c : found) {
    if (exclude && c.node == *exclude) continue;
    const float score = kernels::dot(q.data(), vectors_.data() + c.node * dim_, dim_);
    out.push_back({rows_[c.node], std::clamp(score, -1.0f, 1.0f)});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.score > b.score || (a.score == b.score && a.row < b.row);
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::span<const std::uint32_t> AnnIndex::links(std::uint32_t node,
                                               int level) const {
  if (node >= links_.size() || level < 0 ||
      static_cast<std::size_t>(level) >= links_[node].size()) {
    return {};
  }
  return links_[node][static_cast<std::size_t>(level)];
}

void AnnIndex::save(std::ostream& out, std::string_view model_fingerprint) const {
  out << "ANNIDX 1 " << rows_.size() << ' ' << dim_ << ' ' << cfg_.graph_degree
      << '\n';
  write_pod<std::uint8_t>(out, side_ == MatrixSide::kInput ? 0 : 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model_fingerprint.size()));
  write_raw(out, model_fingerprint.data(), model_fingerprint.size());
  write_pod<std::uint64_t>(out, cfg_.ef_construction);
  write_pod<std::uint64_t>(out, cfg_.ef_search);
  write_pod<std::uint64_t>(out, cfg_.seed);
  write_pod<std::uint32_t>(out, entry_);
  write_pod<std::int32_t>(out, max_level_);
  write_raw(out, rows_.data(), rows_.size() * sizeof(std::uint32_t));
  for (std::size_t node = 0; node < rows_.size(); ++node) {
    write_pod<std::int32_t>(out, levels_[node]);
    for (const auto& list : links_[node]) {
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
      write_raw(out, list.data(), list.size() * sizeof(std::uint32_t));
    }
  }
}

AnnIndex AnnIndex::load(std::istream& in, const DualEmbedding& model,
                        std::string_view model_fingerprint) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("missing ANN index header");
  const auto parts = split(header, ' ');
  std::size_t n = 0;
  std::size_t d = 0;
  AnnIndex idx;
  if (parts.size() != 5 || parts[0] != "ANNIDX" || parts[1] != "1" ||
      !parse_number(parts[2], n) || !parse_number(parts[3], d) ||
      !parse_number(parts[4], idx.cfg_.graph_degree)) {
    throw InputError("bad ANN index header: " + header);
  }
  if (d != model.dim()) {
    throw InputError(fmt::format("ANN index dimension {} does not match model {}",
                                 d, model.dim()));
  }
  idx.side_ = read_pod<std::uint8_t>(in) == 0 ? MatrixSide::kInput
                                              : MatrixSide::kOutput;
  std::string fingerprint(read_pod<std::uint32_t>(in), '\0');
  in.read(fingerprint.data(), static_cast<std::streamsize>(fingerprint.size()));
  if (!in) throw InputError("truncated ANN index");
  if (fingerprint != model_fingerprint) {
    throw InputError("ANN index was built for a different model file");
  }
  idx.cfg_.ef_construction = read_pod<std::uint64_t>(in);
  idx.cfg_.ef_search = read_pod<std::uint64_t>(in);
  idx.cfg_.seed = read_pod<std::uint64_t>(in);
  idx.entry_ = read_pod<std::uint32_t>(in);
  idx.max_level_ = read_pod<std::int32_t>(in);
  idx.rows_.resize(n);
  in.read(reinterpret_cast<char*>(idx.rows_.data()),
          static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
  if (!in) throw InputError("truncated ANN index");
  for (auto r : idx.rows_) {
    if (r >= model.size()) throw InputError("ANN index row out of range");
  }
  idx.levels_.resize(n);
  idx.links_.resize(n);
  for (std::size_t node = 0; node < n; ++node) {
    const int level = read_pod<std::int32_t>(in);
    if (level < 0 || level > idx.max_level_) throw InputError("bad ANN node level");
    idx.levels_[node] = level;
    idx.links_[node].resize(static_cast<std::size_t>(level) + 1);
    for (auto& list : idx.links_[node]) {
      list.resize(read_pod<std::uint32_t>(in));
      in.read(reinterpret_cast<char*>(list.data()),
              static_cast<std::streamsize>(list.size() * sizeof(std::uint32_t)));
      if (!in) throw InputError("truncated ANN index");
      for (auto nb : list) {
        if (nb >= n) throw InputError("ANN link out of range");
      }
    }
  }
  if (idx.entry_ >= n) throw InputError("bad ANN entry point");
  idx.init_vectors(model);
  return idx;
}

}  // namespace dualrec

// Copyright 2026 The kgembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "kgembed/error.hpp"
#include "kgembed/term.hpp"

namespace kgembed {

struct Edge {
  std::string relation;
  Term start;
  Term end;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Term term;
  double weight = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Undirected weighted graph over terms. Parallel edges between the same pair
/// of terms are merged in the adjacency by summing their weights; self-loops
/// are kept in the edge list but never appear in the adjacency.
///
/// The node set is the set of terms incident to at least one non-loop edge.
/// Immutable after construction.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  explicit KnowledgeGraph(std::vector<Edge> edges) : edges_(std::move(edges)) {
    std::map<Term, std::map<Term, double>> merged;
    for (const Edge& e : edges_) {
      if (e.relation.empty()) throw ArgumentError("edge with empty relation");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw ArgumentError("edge " + e.start.str() + " -- " + e.end.str() +
                            " has non-positive or non-finite weight");
      }
      if (e.start == e.end) continue;
      merged[e.start][e.end] += e.weight;
      merged[e.end][e.start] += e.weight;
    }
    for (auto& [term, row] : merged) {
      auto& list = adjacency_[term];
      list.reserve(row.size());
      for (auto& [other, w] : row) list.push_back(Neighbor{other, w});
    }
  }

  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t node_count() const { return adjacency_.size(); }
  bool empty() const { return adjacency_.empty(); }

  bool contains(const Term& t) const { return adjacency_.contains(t); }

  /// Number of distinct neighbors.
  std::size_t degree(const Term& t) const {
    auto it = adjacency_.find(t);
    return it == adjacency_.end() ? 0 : it->second.size();
  }

  /// Adjacency list of `t` sorted by (lang, text); empty when `t` is absent.
  std::span<const Neighbor> neighbors(const Term& t) const {
    auto it = adjacency_.find(t);
    if (it == adjacency_.end()) return {};
    return it->second;
  }

  /// Nodes in (lang, text) order.
  std::vector<Term> nodes() const {
    std::vector<Term> out;
    out.reserve(adjacency_.size());
    for (const auto& [t, _] : adjacency_) out.push_back(t);
    return out;
  }

  const std::map<Term, std::vector<Neighbor>>& adjacency() const { return adjacency_; }

 private:
  std::vector<Edge> edges_;
  std::map<Term, std::vector<Neighbor>> adjacency_;
};

struct EdgeLoadOptions {
  /// Throw on the first malformed line instead of skipping and counting it.
  bool fail_fast = true;
};

struct EdgeLoadStats {
  std::size_t lines = 0;
  std::size_t edges = 0;
  std::size_t comments = 0;
  std::size_t malformed = 0;
  std::size_t self_loops = 0;
  /// First few malformed-line diagnostics, for reporting.
  std::vector<std::string> diagnostics;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

/// Parses one edge line; returns an error message on failure.
inline std::variant<Edge, std::string> parse_edge_line(std::string_view line) {
  auto fields = split(line, '\t');
  if (fields.size() < 3) {
    return "expected at least 3 tab-separated fields, got " + std::to_string(fields.size());
  }
  if (fields.size() > 4) return "expected at most 4 tab-separated fields, got " + std::to_string(fields.size());
  Edge e;
  e.relation = std::string(trim(fields[0]));
  if (e.relation.empty()) return std::string("empty relation");
  auto start = try_parse_term(trim(fields[1]));
  if (!start) return "malformed start term '" + std::string(fields[1]) + "'";
  auto end = try_parse_term(trim(fields[2]));
  if (!end) return "malformed end term '" + std::string(fields[2]) + "'";
  e.start = *std::move(start);
  e.end = *std::move(end);
  if (fields.size() == 4) {
    auto w = parse_double(trim(fields[3]));
    if (!w) return "non-numeric weight '" + std::string(fields[3]) + "'";
    if (!std::isfinite(*w) || *w <= 0.0) return "weight must be positive and finite";
    e.weight = *w;
  }
  return e;
}

}  // namespace detail

/// Reads a tab-separated edge file: `relation<TAB>lang:text<TAB>lang:text[<TAB>weight]`.
/// Lines starting with '#' and blank lines are ignored. Self-loops are counted
/// and dropped.
inline KnowledgeGraph load_edges(const std::filesystem::path& path,
                                 const EdgeLoadOptions& options = {},
                                 EdgeLoadStats* stats_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge file " + path.string());
  EdgeLoadStats stats;
  std::vector<Edge> edges;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (detail::trim(view).empty()) continue;
    if (view.front() == '#') {
      ++stats.comments;
      continue;
    }
    auto parsed = detail::parse_edge_line(view);
    if (auto* msg = std::get_if<std::string>(&parsed)) {
      if (options.fail_fast) throw ParseError(path.string(), stats.lines, *msg);
      ++stats.malformed;
      if (stats.diagnostics.size() < 10) {
        stats.diagnostics.push_back(path.string() + ":" + std::to_string(stats.lines) + ": " + *msg);
      }
      continue;
    }
    Edge& e = std::get<Edge>(parsed);
    if (e.start == e.end) {
      ++stats.self_loops;
      continue;
    }
    edges.push_back(std::move(e));
  }
  if (in.bad()) throw IoError("error reading edge file " + path.string());
  stats.edges = edges.size();
  if (stats_out != nullptr) *stats_out = std::move(stats);
  return KnowledgeGraph(std::move(edges));
}

inline std::set<std::string> default_negative_relations() {
  return {"Antonym",       "NotUsedFor", "NotCapableOf", "NotHasProperty",
          "NotDesires",    "DistinctFrom", "ObstructedBy"};
}

struct FilterOptions {
  std::size_t min_degree = 3;
  std::set<std::string> negative_relations = default_negative_relations();
  /// Nodes with at least this many underscore-separated words are removed.
  std::size_t max_phrase_words = 4;
};

/// Single pass, in order: degree threshold on the input graph, negative
/// relation removal, long-phrase removal. Degrees are not recomputed between
/// steps, so survivors may end up below `min_degree`.
inline KnowledgeGraph filter_subgraph(const KnowledgeGraph& g, const FilterOptions& opts = {}) {
  if (opts.min_degree < 1) throw ArgumentError("min_degree must be >= 1");
  if (opts.max_phrase_words < 1) throw ArgumentError("max_phrase_words must be >= 1");
  const auto keep_node = [&](const Term& t) {
    return g.degree(t) >= opts.min_degree && t.word_count() < opts.max_phrase_words;
  };
  std::vector<Edge> kept;
  for (const Edge& e : g.edges()) {
    if (e.start == e.end) continue;
    if (!keep_node(e.start) || !keep_node(e.end)) continue;
    if (opts.negative_relations.contains(e.relation)) continue;
    kept.push_back(e);
  }
  return KnowledgeGraph(std::move(kept));
}

}  // namespace kgembed

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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/oov.hpp"
#include "kgembed/term.hpp"

namespace kgembed {

/// Cosine similarity; 0 when either vector is zero.
inline double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw ArgumentError("cosine: dimensions " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

/// Product-moment correlation. Empty when the lengths differ, there are fewer
/// than two points, or either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: lists differ in length");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of average ranks.
inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: lists differ in length");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// 2ps / (p + s) when both are nonnegative and p + s > 0, else 0.
inline double harmonic_mean(double p, double s) {
  if (p < 0.0 || s < 0.0 || p + s <= 0.0) return 0.0;
  return 2.0 * p * s / (p + s);
}

/// Mean of the `top_k` largest scores.
inline double aggregate(std::span<const double> scores, std::size_t top_k) {
  if (top_k == 0) throw ArgumentError("aggregate: top_k must be positive");
  if (scores.size() < top_k) {
    throw ArgumentError("aggregate: " + std::to_string(scores.size()) + " scores, top " + std::to_string(top_k) +
                        " requested");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < top_k; ++i) sum += sorted[i];
  return sum / static_cast<double>(top_k);
}

struct SimilarityPair {
  Term first;
  Term second;
  double gold = 0.0;
};

struct SimilarityDataset {
  std::string name;
  std::vector<SimilarityPair> pairs;
  double lo = 0.0;
  double hi = 4.0;

  void validate() const {
    if (!(lo < hi)) throw ArgumentError("dataset " + name + ": scale needs lo < hi");
    for (const auto& p : pairs) {
      if (!(p.gold >= lo && p.gold <= hi)) {
        throw ArgumentError("dataset " + name + ": gold score outside the scale for " + p.first.str() + " / " +
                            p.second.str());
      }
    }
  }
};

/// TSV rows `lang1:word1<TAB>lang2:word2<TAB>gold`; blank and '#' lines skipped.
inline SimilarityDataset load_dataset(const std::filesystem::path& path, std::string name = {}, double lo = 0.0,
                                      double hi = 4.0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  SimilarityDataset d;
  d.name = name.empty() ? path.stem().string() : std::move(name);
  d.lo = lo;
  d.hi = hi;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split(view, '\t');
    if (fields.size() != 3) throw ParseError(path.string(), line_no, "expected 3 tab-separated fields");
    auto a = try_parse_term(detail::trim(fields[0]));
    auto b = try_parse_term(detail::trim(fields[1]));
    auto gold = detail::parse_double(detail::trim(fields[2]));
    if (!a || !b) throw ParseError(path.string(), line_no, "terms must be lang:text");
    if (!gold || !std::isfinite(*gold)) throw ParseError(path.string(), line_no, "non-numeric gold score");
    if (*gold < lo || *gold > hi) throw ParseError(path.string(), line_no, "gold score outside the scale");
    d.pairs.push_back({*std::move(a), *std::move(b), *gold});
  }
  if (in.bad()) throw IoError("error reading dataset " + path.string());
  return d;
}

struct ScoreReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double harmonic = 0.0;
  std::size_t oov_pair_count = 0;
  /// One prediction per dataset pair, on the gold scale.
  std::vector<double> predictions;
  /// Set when a correlation was undefined and reported as 0.
  bool undefined = false;
};

/// Correlates predictions with gold scores; undefined correlations score 0.
inline ScoreReport score_predictions(std::span<const double> gold, std::vector<double> predictions,
                                     std::size_t oov_pair_count = 0) {
  if (gold.size() != predictions.size()) throw ArgumentError("score_predictions: length mismatch");
  ScoreReport r;
  r.oov_pair_count = oov_pair_count;
  const auto p = pearson(predictions, gold);
  const auto s = spearman(predictions, gold);
  r.undefined = !p || !s;
  r.pearson = p.value_or(0.0);
  r.spearman = s.value_or(0.0);
  r.harmonic = harmonic_mean(r.pearson, r.spearman);
  r.predictions = std::move(predictions);
  return r;
}

/// Maps a cosine in [-1, 1] affinely onto [lo, hi].
inline double cosine_to_scale(double cos, double lo, double hi) { return lo + (cos + 1.0) / 2.0 * (hi - lo); }

/// Predicts every pair: rescaled cosine of the resolved vectors, or the scale
/// midpoint when either side cannot be resolved. No pair is dropped.
inline ScoreReport score_dataset(const SimilarityDataset& d, const Resolver& resolver) {
  d.validate();
  std::vector<double> gold;
  std::vector<double> predictions;
  gold.reserve(d.pairs.size());
  predictions.reserve(d.pairs.size());
  std::size_t misses = 0;
  for (const auto& pair : d.pairs) {
    gold.push_back(pair.gold);
    auto a = resolver.resolve(pair.first);
    auto b = a ? resolver.resolve(pair.second) : std::nullopt;
    if (!a || !b) {
      ++misses;
      predictions.push_back(resolve_pair_default(d.lo, d.hi));
    } else {
      predictions.push_back(cosine_to_scale(cosine(a->vector, b->vector), d.lo, d.hi));
    }
  }
  return score_predictions(gold, std::move(predictions), misses);
}

inline ScoreReport score_dataset(const SimilarityDataset& d, const EmbeddingMatrix& m, const KnowledgeGraph& g,
                                 const OOVConfig& cfg = {}) {
  return score_dataset(d, Resolver(m, g, cfg));
}

/// Key-value lines: pearson=, spearman=, harmonic=, oov_pairs=, pairs=.
inline void write_report_kv(std::ostream& os, const std::string& name, const ScoreReport& r) {
  const auto num = [](double v) {
    std::string s;
    detail::append_number(s, v);
    return s;
  };
  os << "dataset=" << name << '\n'
     << "pearson=" << num(r.pearson) << '\n'
     << "spearman=" << num(r.spearman) << '\n'
     << "harmonic=" << num(r.harmonic) << '\n'
     << "oov_pairs=" << r.oov_pair_count << '\n'
     << "pairs=" << r.predictions.size() << '\n';
  if (r.undefined) os << "warning=undefined_correlation\n";
}

}  // namespace kgembed

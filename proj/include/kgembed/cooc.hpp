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
#include <Eigen/SparseCore>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/linalg.hpp"
#include "kgembed/term.hpp"

namespace kgembed {

/// Symmetric co-occurrence weights. Each unordered pair is stored once with
/// the smaller term first; reads are mirrored.
class SparseCooccurrence {
 public:
  using Pair = std::pair<Term, Term>;

  /// Adds 1/n to every unordered pair of distinct terms in the deduplicated
  /// set of n terms from one aligned unit.
  void accumulate(std::span<const Term> unit) {
    const std::set<Term> distinct(unit.begin(), unit.end());
    const std::size_t n = distinct.size();
    if (n < 2) return;
    const double share = 1.0 / static_cast<double>(n);
    for (auto a = distinct.begin(); a != distinct.end(); ++a) {
      for (auto b = std::next(a); b != distinct.end(); ++b) {
        counts_[{*a, *b}] += share;
        totals_[*a] += share;
        totals_[*b] += share;
        grand_total_ += 2.0 * share;
      }
    }
  }

  /// Sum of another shard's counts into this one.
  void merge(const SparseCooccurrence& other) {
    for (const auto& [p, c] : other.counts_) counts_[p] += c;
    for (const auto& [t, c] : other.totals_) totals_[t] += c;
    grand_total_ += other.grand_total_;
  }

  double count(const Term& a, const Term& b) const {
    if (a == b) return 0.0;
    auto it = counts_.find(a < b ? Pair{a, b} : Pair{b, a});
    return it == counts_.end() ? 0.0 : it->second;
  }

  double total(const Term& t) const {
    auto it = totals_.find(t);
    return it == totals_.end() ? 0.0 : it->second;
  }

  double grand_total() const { return grand_total_; }
  const std::map<Pair, double>& pairs() const { return counts_; }
  const std::map<Term, double>& totals() const { return totals_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::map<Pair, double> counts_;
  std::map<Term, double> totals_;
  double grand_total_ = 0.0;
};

inline void accumulate_pair(SparseCooccurrence& c, std::span<const Term> aligned_unit) {
  c.accumulate(aligned_unit);
}

/// Positive PMI over the terms with nonzero marginals, in sorted order.
struct PpmiMatrix {
  std::vector<Term> vocab;
  Eigen::SparseMatrix<double> values;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(values); }
};

/// PMI(a, b) = log(c_ab * sum_u T_u^alpha / (T_a * T_b^alpha)), keeping only
/// positive values. alpha = 1 is plain PMI; alpha < 1 smooths the context
/// distribution and makes the matrix asymmetric.
inline PpmiMatrix ppmi(const SparseCooccurrence& c, double cds_alpha = 1.0) {
  if (!(cds_alpha > 0.0 && cds_alpha <= 1.0)) throw ArgumentError("cds_alpha must be in (0, 1]");
  if (!(c.grand_total() > 0.0)) throw DegenerateInputError("co-occurrence counts are empty");
  PpmiMatrix out;
  std::map<Term, Eigen::Index> index;
  double context_mass = 0.0;
  for (const auto& [t, total] : c.totals()) {
    index.emplace(t, static_cast<Eigen::Index>(out.vocab.size()));
    out.vocab.push_back(t);
    context_mass += std::pow(total, cds_alpha);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  const auto add = [&](const Term& a, const Term& b, double count) {
    const double pmi = std::log(count * context_mass / (c.total(a) * std::pow(c.total(b), cds_alpha)));
    if (pmi > 0.0) triplets.emplace_back(index.at(a), index.at(b), pmi);
  };
  for (const auto& [p, count] : c.pairs()) {
    add(p.first, p.second, count);
    add(p.second, p.first, count);
  }
  const auto n = static_cast<Eigen::Index>(out.vocab.size());
  out.values.resize(n, n);
  out.values.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

/// Term vectors U diag(S)^{1/2} from a rank-`dims` truncated SVD of the PPMI
/// matrix.
inline EmbeddingMatrix embed_cooc(const SparseCooccurrence& c, Eigen::Index dims, std::uint64_t seed,
                                  double cds_alpha = 1.0, const SvdOptions& svd_options = {}) {
  if (c.empty()) throw DegenerateInputError("co-occurrence counts are empty");
  const PpmiMatrix p = ppmi(c, cds_alpha);
  if (dims < 1 || dims > static_cast<Eigen::Index>(p.vocab.size())) {
    throw ArgumentError("embedding dimension " + std::to_string(dims) + " exceeds vocabulary size " +
                        std::to_string(p.vocab.size()));
  }
  const TruncatedSVD svd = truncated_svd(p.dense(), dims, seed, svd_options);
  return EmbeddingMatrix(p.vocab, svd.U * svd.S.cwiseSqrt().asDiagonal());
}

/// One aligned unit per line, whitespace-separated "lang:text" tokens.
inline std::vector<std::vector<Term>> load_aligned_units(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<std::vector<Term>> units;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<Term> unit;
    for (auto token : detail::split_ws(line)) {
      auto t = try_parse_term(token);
      if (!t) throw ParseError(path.string(), line_no, "token '" + std::string(token) + "' is not lang:text");
      unit.push_back(*std::move(t));
    }
    units.push_back(std::move(unit));
  }
  if (in.bad()) throw IoError("error reading corpus " + path.string());
  return units;
}

inline SparseCooccurrence count_units(const std::vector<std::vector<Term>>& units) {
  SparseCooccurrence c;
  for (const auto& u : units) c.accumulate(u);
  return c;
}

}  // namespace kgembed

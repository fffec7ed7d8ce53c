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
#include <optional>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/graph.hpp"

namespace kgembed {

struct RetrofitConfig {
  int iterations = 10;
  /// Early exit once no entry moves by this much or more in a sweep.
  double convergence_tol = 1e-6;
  /// Weight pulling observed terms toward their original vectors.
  double orig_weight = 1.0;
};

/// Source rows followed by zero rows for graph terms missing from the source,
/// the latter in (lang, text) order.
inline EmbeddingMatrix expand_vocabulary(const EmbeddingMatrix& source, const KnowledgeGraph& g) {
  std::vector<Term> added;
  for (const auto& [t, _] : g.adjacency()) {
    if (!source.contains(t)) added.push_back(t);
  }
  if (added.empty()) return source;
  std::vector<Term> vocab = source.vocab();
  vocab.insert(vocab.end(), added.begin(), added.end());
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.size()), source.dim());
  data.topRows(source.rows()) = source.data();
  return EmbeddingMatrix(std::move(vocab), std::move(data));
}

/// The quadratic retrofitting problem over an expanded vocabulary:
///
///   sum_i a_i |q_i - q0_i|^2 + sum_{i<j} w_ij |q_i - q_j|^2
///
/// with a_i = orig_weight for terms that had a source row and 0 otherwise.
/// Each undirected edge is counted once, so the Jacobi update
/// q_i <- (a_i q0_i + sum_j w_ij q_j) / (a_i + sum_j w_ij) is the exact
/// per-row minimizer.
class RetrofitProblem {
 public:
  struct Result {
    Eigen::MatrixXd q;
    int sweeps = 0;
    double last_change = 0.0;
    bool converged = false;
  };

  RetrofitProblem(const EmbeddingMatrix& source, const KnowledgeGraph& g, double orig_weight)
      : expanded_(expand_vocabulary(source, g)) {
    if (!(orig_weight >= 0.0) || !std::isfinite(orig_weight)) {
      throw ArgumentError("orig_weight must be a nonnegative finite number");
    }
    const auto n = static_cast<std::size_t>(expanded_.rows());
    alpha_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    alpha_.head(source.rows()).setConstant(orig_weight);
    offsets_.assign(n + 1, 0);
    std::vector<std::vector<std::pair<std::size_t, double>>> lists(n);
    for (const auto& [t, nbrs] : g.adjacency()) {
      const std::size_t i = *expanded_.index_of(t);
      for (const Neighbor& nb : nbrs) lists[i].emplace_back(*expanded_.index_of(nb.term), nb.weight);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(lists[i].begin(), lists[i].end());
      offsets_[i + 1] = offsets_[i] + lists[i].size();
      for (auto& [j, w] : lists[i]) {
        cols_.push_back(j);
        weights_.push_back(w);
      }
    }
    denom_ = alpha_;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) denom_(static_cast<Eigen::Index>(i)) += weights_[e];
    }
  }

  /// Source rows followed by zero rows; also the starting iterate.
  const EmbeddingMatrix& expanded() const { return expanded_; }
  const Eigen::MatrixXd& original() const { return expanded_.data(); }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// a_i + sum_j w_ij per row.
  const Eigen::VectorXd& denominators() const { return denom_; }

  template <typename Fn>
  void for_each_neighbor(std::size_t i, Fn&& fn) const {
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) fn(cols_[e], weights_[e]);
  }

  /// alpha_i q0_i + sum_j w_ij q_j for every row.
  Eigen::MatrixXd numerators(const Eigen::MatrixXd& q) const {
    Eigen::MatrixXd out = alpha_.asDiagonal() * original();
    for (std::size_t i = 0; i < offsets_.size() - 1; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for_each_neighbor(i, [&](std::size_t j, double w) { out.row(r) += w * q.row(static_cast<Eigen::Index>(j)); });
    }
    return out;
  }

  /// One Jacobi sweep. Rows with a zero denominator keep their value.
  Eigen::MatrixXd sweep(const Eigen::MatrixXd& q) const {
    Eigen::MatrixXd next = numerators(q);
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
      if (denom_(i) > 0.0) {
        next.row(i) /= denom_(i);
      } else {
        next.row(i) = q.row(i);
      }
    }
    return next;
  }

  double objective(const Eigen::MatrixXd& q) const {
    double total = (alpha_.array() * (q - original()).rowwise().squaredNorm().array()).sum();
    for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
      for_each_neighbor(i, [&](std::size_t j, double w) {
        if (j > i) {
          total += w * (q.row(static_cast<Eigen::Index>(i)) - q.row(static_cast<Eigen::Index>(j))).squaredNorm();
        }
      });
    }
    return total;
  }

  /// max_i |q_i (a_i + sum w_ij) - (a_i q0_i + sum w_ij q_j)|_inf over rows
  /// with a positive denominator.
  double stationarity_residual(const Eigen::MatrixXd& q) const {
    const Eigen::MatrixXd num = numerators(q);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      if (denom_(i) <= 0.0) continue;
      worst = std::max(worst, (q.row(i) * denom_(i) - num.row(i)).cwiseAbs().maxCoeff());
    }
    return worst;
  }

  /// Runs Jacobi sweeps from `initial` until `cfg.iterations` sweeps or the
  /// largest per-entry change drops below `cfg.convergence_tol`.
  Result solve(const RetrofitConfig& cfg, Eigen::MatrixXd initial) const {
    if (cfg.iterations < 1) throw ArgumentError("retrofit iterations must be >= 1");
    if (initial.rows() != expanded_.rows() || initial.cols() != expanded_.dim()) {
      throw ArgumentError("retrofit initial iterate has the wrong shape");
    }
    Result r;
    r.q = std::move(initial);
    for (int s = 0; s < cfg.iterations; ++s) {
      Eigen::MatrixXd next = sweep(r.q);
      r.last_change = r.q.size() == 0 ? 0.0 : (next - r.q).cwiseAbs().maxCoeff();
      r.q = std::move(next);
      r.sweeps = s + 1;
      if (r.last_change < cfg.convergence_tol) {
        r.converged = true;
        break;
      }
    }
    return r;
  }

 private:
  EmbeddingMatrix expanded_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd denom_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cols_;
  std::vector<double> weights_;
};

/// Expanded retrofitting of a standardized source over `g`. Returns vectors
/// for the union of the source and graph vocabularies.
inline EmbeddingMatrix retrofit(const EmbeddingMatrix& source, const KnowledgeGraph& g,
                                const RetrofitConfig& cfg = {}) {
  RetrofitProblem problem(source, g, cfg.orig_weight);
  auto result = problem.solve(cfg, problem.original());
  return EmbeddingMatrix(problem.expanded().vocab(), std::move(result.q));
}

}  // namespace kgembed

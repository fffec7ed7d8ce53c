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
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "kgembed/error.hpp"

namespace kgembed {

/// Rank-k factorization M ~ U diag(S) V^T. Columns of U and V are
/// orthonormal, S is non-increasing and nonnegative, and the largest-magnitude
/// entry of every V column is positive.
struct TruncatedSVD {
  Eigen::MatrixXd U;
  Eigen::VectorXd S;
  Eigen::MatrixXd V;

  Eigen::MatrixXd reconstruct() const { return U * S.asDiagonal() * V.transpose(); }
};

struct SvdOptions {
  Eigen::Index oversample = 10;
  /// Minimum number of subspace (power) iterations.
  int power_iterations = 4;
  /// Iterations continue past the minimum until the leading k singular values
  /// change by less than this relative amount between iterations.
  double ritz_tolerance = 1e-12;
  int max_power_iterations = 300;
};

inline Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.rows()) {
    throw ArgumentError("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
  return a * b;
}

/// Multiplies column j of `a` by s[j].
inline Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& a, const Eigen::VectorXd& s) {
  if (a.cols() != s.size()) {
    throw ArgumentError("scale_columns: " + std::to_string(a.cols()) + " columns but " +
                        std::to_string(s.size()) + " scales");
  }
  return a * s.asDiagonal();
}

namespace detail {

/// Thin orthonormal basis of the column space of `y` (Householder QR).
inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

/// Replaces the columns flagged in `deficient` by unit vectors orthogonal to
/// every other column (Gram-Schmidt against the standard basis).
inline void complete_basis(Eigen::MatrixXd& q, const std::vector<bool>& deficient) {
  const Eigen::Index n = q.rows();
  Eigen::Index candidate = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (!deficient[static_cast<std::size_t>(j)]) continue;
    bool placed = false;
    while (!placed && candidate < n) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, candidate++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < q.cols(); ++i) {
          if (i == j || (deficient[static_cast<std::size_t>(i)] && i > j)) continue;
          v -= q.col(i).dot(v) * q.col(i);
        }
      }
      const double norm = v.norm();
      if (norm > 1e-6) {
        q.col(j) = v / norm;
        placed = true;
      }
    }
    if (!placed) throw ArgumentError("cannot complete orthonormal basis");
  }
}

struct DenseSVD {
  Eigen::MatrixXd U;  // m x n
  Eigen::VectorXd S;  // n, non-increasing
  Eigen::MatrixXd V;  // n x n
};

/// One-sided Jacobi (Hestenes) SVD of a tall matrix a (rows >= cols).
inline DenseSVD jacobi_svd(Eigen::MatrixXd a);

/// Tall inputs are reduced to their square triangular factor first.
inline DenseSVD tall_svd(const Eigen::MatrixXd& a) {
  if (a.rows() <= a.cols() + a.cols() / 2) return jacobi_svd(a);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index n = a.cols();
  Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  DenseSVD inner = jacobi_svd(std::move(r));
  inner.U = qr.householderQ() * (Eigen::MatrixXd(a.rows(), n) << inner.U,
                                 Eigen::MatrixXd::Zero(a.rows() - n, n)).finished();
  return inner;
}

inline DenseSVD jacobi_svd(Eigen::MatrixXd a) {
  const Eigen::Index n = a.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Eigen::VectorXd ap = a.col(p);
        a.col(p) = c * ap - s * a.col(q);
        a.col(q) = s * ap + c * a.col(q);
        const Eigen::VectorXd vp = v.col(p);
        v.col(p) = c * vp - s * v.col(q);
        v.col(q) = s * vp + c * v.col(q);
      }
    }
    if (!rotated) break;
  }
  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = a.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });
  DenseSVD out;
  out.U.resize(a.rows(), n);
  out.S.resize(n);
  out.V.resize(n, n);
  const double smax = n > 0 ? norms(order[0]) : 0.0;
  const double floor = smax * eps * static_cast<double>(std::max(a.rows(), n));
  std::vector<bool> deficient(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.S(j) = norms(src);
    out.V.col(j) = v.col(src);
    if (norms(src) > floor && norms(src) > 0.0) {
      out.U.col(j) = a.col(src) / norms(src);
    } else {
      out.U.col(j).setZero();
      deficient[static_cast<std::size_t>(j)] = true;
    }
  }
  if (std::find(deficient.begin(), deficient.end(), true) != deficient.end()) {
    complete_basis(out.U, deficient);
  }
  return out;
}

/// Flips column pairs so the largest-magnitude entry of each V column is positive.
inline void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) {
      v.col(j) *= -1.0;
      u.col(j) *= -1.0;
    }
  }
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace detail

/// Randomized truncated SVD: Gaussian range finder with oversampling and
/// orthonormalized subspace iteration, followed by an exact one-sided Jacobi
/// SVD of the projected matrix. Deterministic for a fixed seed.
inline TruncatedSVD truncated_svd(const Eigen::MatrixXd& m, Eigen::Index k, std::uint64_t seed,
                                  const SvdOptions& opts = {}) {
  const Eigen::Index min_dim = std::min(m.rows(), m.cols());
  if (k < 1 || k > min_dim) {
    throw ArgumentError("truncated_svd: rank " + std::to_string(k) + " outside [1, " +
                        std::to_string(min_dim) + "]");
  }
  if (!m.allFinite()) throw ArgumentError("truncated_svd: matrix has non-finite entries");
  Eigen::Index width = std::min(k + opts.oversample, min_dim);
  // A sketch covering half the column space or more is widened to all of it,
  // which makes the factorization exact without iterating.
  if (2 * width >= min_dim) width = min_dim;
  const Eigen::MatrixXd omega = detail::gaussian_matrix(m.cols(), width, seed);
  Eigen::MatrixXd q = detail::orthonormalize(m * omega);

  if (width < min_dim) {
    Eigen::VectorXd previous;
    for (int it = 1; it <= opts.max_power_iterations; ++it) {
      q = detail::orthonormalize(m * detail::orthonormalize(m.transpose() * q));
      if (it < opts.power_iterations) continue;
      // Ritz values from the small Gram matrix; only used to detect convergence.
      const Eigen::MatrixXd b = q.transpose() * m;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b * b.transpose(), Eigen::EigenvaluesOnly);
      const Eigen::VectorXd current =
          eig.eigenvalues().reverse().head(k).cwiseMax(0.0).cwiseSqrt();
      if (previous.size() == k) {
        const double scale = std::max(current(0), std::numeric_limits<double>::min());
        if ((current - previous).cwiseAbs().maxCoeff() <= opts.ritz_tolerance * scale) break;
      }
      previous = current;
    }
  }
  const detail::DenseSVD small = detail::tall_svd(m.transpose() * q);

  // m^T q = U_b S W^T  =>  q^T m = W S U_b^T, so m ~ (q W) S U_b^T.
  TruncatedSVD out;
  out.U = q * small.V.leftCols(k);
  out.S = small.S.head(k);
  out.V = small.U.leftCols(k);
  detail::fix_signs(out.U, out.V);
  return out;
}

}  // namespace kgembed

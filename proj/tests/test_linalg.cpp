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


#include <Eigen/Dense>

#include <random>

#include "gtest/gtest.h"
#include "kgembed/linalg.hpp"

namespace kgembed {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  return m;
}

void expect_well_formed(const TruncatedSVD& r, double tol = 1e-6) {
  const auto k = r.S.size();
  EXPECT_LT((r.U.transpose() * r.U - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((r.V.transpose() * r.V - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), tol);
  for (Eigen::Index i = 0; i < k; ++i) {
    EXPECT_GE(r.S(i), 0.0);
    if (i > 0) {
      EXPECT_LE(r.S(i), r.S(i - 1));
    }
    Eigen::Index arg = 0;
    r.V.col(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.V(arg, i), 0.0);
  }
}

TEST(TruncatedSvdTest, Identity) {
  const auto r = truncated_svd(Eigen::MatrixXd::Identity(3, 3), 3, 1);
  EXPECT_LT((r.S - Eigen::Vector3d::Ones()).cwiseAbs().maxCoeff(), 1e-12);
  expect_well_formed(r);
}

TEST(TruncatedSvdTest, RankOneOuterProduct) {
  Eigen::VectorXd u(4), v(3);
  u << 2, 0, 0, 0;
  v << 0, 3, 0;
  std::mt19937_64 rng(2);
  // Rotate both factors so the test is not axis aligned; norms stay 2 and 3.
  const Eigen::MatrixXd qu = random_matrix(4, 4, rng).householderQr().householderQ();
  const Eigen::MatrixXd qv = random_matrix(3, 3, rng).householderQr().householderQ();
  const Eigen::MatrixXd m = (qu * u) * (qv * v).transpose();
  const auto r = truncated_svd(m, 1, 7);
  EXPECT_NEAR(r.S(0), 6.0, 1e-12);
  EXPECT_LT((r.reconstruct() - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TruncatedSvdTest, FullRankRoundTrip) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd m = random_matrix(50, 20, rng);
  const auto r = truncated_svd(m, 20, 11);
  EXPECT_LT((r.reconstruct() - m).cwiseAbs().maxCoeff(), 1e-8);
  expect_well_formed(r);
}

TEST(TruncatedSvdTest, RankOutOfRange) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Ones(4, 3);
  EXPECT_THROW(truncated_svd(m, 4, 0), ArgumentError);
  EXPECT_THROW(truncated_svd(m, 0, 0), ArgumentError);
}

TEST(TruncatedSvdTest, NonFiniteRejected) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(3, 3);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(truncated_svd(m, 1, 0), ArgumentError);
}

TEST(TruncatedSvdTest, ZeroMatrixHasOrthonormalFactors) {
  const auto r = truncated_svd(Eigen::MatrixXd::Zero(6, 4), 2, 5);
  EXPECT_EQ(r.S, Eigen::Vector2d::Zero());
  expect_well_formed(r);
}

TEST(TruncatedSvdTest, RankDeficientWideMatrix) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd m = random_matrix(5, 2, rng) * random_matrix(2, 30, rng);
  const auto r = truncated_svd(m, 4, 9);
  expect_well_formed(r);
  EXPECT_LT(r.S(2), 1e-10 * r.S(0));
  EXPECT_LT((r.reconstruct() - m).norm(), 1e-10 * m.norm());
}

TEST(TruncatedSvdTest, DeterministicForSeed) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd m = random_matrix(120, 80, rng);
  const auto a = truncated_svd(m, 10, 42);
  const auto b = truncated_svd(m, 10, 42);
  EXPECT_EQ(a.U, b.U);
  EXPECT_EQ(a.S, b.S);
  EXPECT_EQ(a.V, b.V);
}

TEST(TruncatedSvdPropertyTest, MatchesDenseOracle) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<Eigen::Index> dim(2, 200);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index rows = dim(rng), cols = dim(rng);
    const Eigen::MatrixXd m = random_matrix(rows, cols, rng);
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, std::min(rows, cols))(rng);
    const auto r = truncated_svd(m, k, static_cast<std::uint64_t>(trial));
    expect_well_formed(r);
    Eigen::BDCSVD<Eigen::MatrixXd> exact(m);
    const Eigen::VectorXd s = exact.singularValues();
    for (Eigen::Index i = 0; i < k; ++i) EXPECT_NEAR(r.S(i), s(i), 1e-6 * s(0)) << rows << "x" << cols << " k=" << k;
    const double optimal = s.tail(s.size() - k).norm();
    const double err = (m - r.reconstruct()).norm();
    EXPECT_LE(err - optimal, 1e-6 * m.norm());
  }
}

TEST(MatmulTest, HandExample) {
  const Eigen::Matrix2d a = (Eigen::Matrix2d() << 1, 2, 3, 4).finished();
  const Eigen::Matrix2d b = (Eigen::Matrix2d() << 1, 0, 0, 1).finished();
  EXPECT_EQ(matmul(a, b.transpose()), a);
  const Eigen::Matrix2d c = (Eigen::Matrix2d() << 0, 1, 1, 0).finished();
  const Eigen::Matrix2d expected = (Eigen::Matrix2d() << 2, 1, 4, 3).finished();
  EXPECT_EQ(matmul(a, c), expected);
}

TEST(MatmulTest, ShapeMismatch) {
  EXPECT_THROW(matmul(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(2, 3)), ArgumentError);
  EXPECT_EQ(matmul(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(3, 1)).rows(), 2);
}

TEST(ScaleColumnsTest, OnesAndHand) {
  const Eigen::Matrix2d a = (Eigen::Matrix2d() << 1, 2, 3, 4).finished();
  EXPECT_EQ(scale_columns(a, Eigen::Vector2d::Ones()), a);
  const Eigen::Matrix2d expected = (Eigen::Matrix2d() << 2, -2, 6, -4).finished();
  EXPECT_EQ(scale_columns(a, Eigen::Vector2d(2, -1)), expected);
  EXPECT_THROW(scale_columns(a, Eigen::Vector3d::Ones()), ArgumentError);
}

}  // namespace
}  // namespace kgembed

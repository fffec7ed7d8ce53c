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

#include <optional>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "kgembed/fusion.hpp"
#include "test_util.hpp"

namespace kgembed {
namespace {

Term en(const std::string& s) { return Term{"en", s}; }

EmbeddingMatrix numbered(int rows, int cols, const std::string& prefix, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Term> vocab;
  Eigen::MatrixXd data(rows, cols);
  for (int i = 0; i < rows; ++i) vocab.push_back(en(prefix + std::to_string(i)));
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = normal(rng);
  return EmbeddingMatrix(std::move(vocab), std::move(data));
}

using Ranks = std::vector<std::optional<std::size_t>>;

TEST(VocabAdmitsTest, DefaultThresholds) {
  EXPECT_TRUE(vocab_admits(Ranks{150000, 450000}, {}));
  EXPECT_FALSE(vocab_admits(Ranks{300000, 300000}, {}));
  EXPECT_FALSE(vocab_admits(Ranks{100, std::nullopt}, {}));
  EXPECT_FALSE(vocab_admits(Ranks{100, 500000}, {}));
  EXPECT_TRUE(vocab_admits(Ranks{199999, 499999}, {}));
  EXPECT_FALSE(vocab_admits(Ranks{200000, 499999}, {}));
  EXPECT_TRUE(vocab_admits(Ranks{5}, {}));
}

TEST(SelectVocabularyTest, ScaledThresholds) {
  // Thresholds scaled down by 10^5: rows 1.5 / 4.5 admitted, 3 / 3 rejected.
  const VocabPolicy policy{.both_threshold = 5, .either_threshold = 2};
  const EmbeddingMatrix a({en("x0"), en("in"), en("x2"), en("out"), en("x4")}, Eigen::MatrixXd::Ones(5, 1));
  const EmbeddingMatrix b({en("y0"), en("y1"), en("y2"), en("out"), en("in")}, Eigen::MatrixXd::Ones(5, 1));
  const KnowledgeGraph g({{"RelatedTo", en("zeta"), en("graph_only"), 1.0}});
  const std::vector<EmbeddingMatrix> sources{a, b};
  const auto vocab = select_vocabulary(sources, g, policy);
  EXPECT_EQ(vocab, (std::vector<Term>{en("graph_only"), en("zeta"), en("in")}));
}

TEST(SelectVocabularyTest, SingleSourceAndCaseFolding) {
  const EmbeddingMatrix a({en("The"), en("the"), en("Cat")}, Eigen::MatrixXd::Ones(3, 1));
  const std::vector<EmbeddingMatrix> sources{a};
  const auto vocab = select_vocabulary(sources, KnowledgeGraph(std::vector<Edge>{}), {.both_threshold = 3, .either_threshold = 3});
  EXPECT_EQ(vocab, (std::vector<Term>{en("cat"), en("the")}));
}

TEST(SelectVocabularyTest, GraphTermsNotDuplicated) {
  const EmbeddingMatrix a({en("a"), en("b")}, Eigen::MatrixXd::Ones(2, 1));
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("c"), 1.0}});
  const std::vector<EmbeddingMatrix> sources{a};
  EXPECT_EQ(select_vocabulary(sources, g), (std::vector<Term>{en("a"), en("c"), en("b")}));
}

TEST(SelectVocabularyTest, Errors) {
  EXPECT_THROW(select_vocabulary({}, KnowledgeGraph(std::vector<Edge>{})), ArgumentError);
  const std::vector<EmbeddingMatrix> sources{numbered(2, 1, "w", 1)};
  EXPECT_THROW(select_vocabulary(sources, KnowledgeGraph(std::vector<Edge>{}), {.both_threshold = 1, .either_threshold = 2}),
               ArgumentError);
}

TEST(BuildUnifiedTest, ConcatenationWithZeroBlocks) {
  const EmbeddingMatrix s1({en("a"), en("b")}, (Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished());
  const EmbeddingMatrix s2({en("b"), en("c")}, (Eigen::MatrixXd(2, 2) << 7, 8, 9, 10).finished());
  const std::vector<EmbeddingMatrix> sources{s1, s2};
  const auto m1 = build_unified(sources, {en("a"), en("b"), en("c"), en("d")});
  ASSERT_EQ(m1.dim(), 5);
  Eigen::MatrixXd expected(4, 5);
  expected << 1, 2, 3, 0, 0,  //
      4, 5, 6, 7, 8,          //
      0, 0, 0, 9, 10,         //
      0, 0, 0, 0, 0;
  EXPECT_EQ(m1.data(), expected);
  EXPECT_THROW(build_unified(sources, {}), ArgumentError);
}

TEST(ProjectionSampleSizeTest, FallbackToAllRows) {
  EXPECT_EQ(projection_sample_size(1000, 2, 0.05), 50u);
  EXPECT_EQ(projection_sample_size(1000, 3, 0.05), 1000u);
  EXPECT_EQ(projection_sample_size(1001, 2, 0.05), 51u);
  EXPECT_EQ(projection_sample_size(30, 2, 1.0), 30u);
  EXPECT_EQ(projection_sample_size(10, 1, 0.05), 10u);
}

TEST(DeriveProjectionTest, OrthonormalRowsGiveIdentityScaling) {
  // Rows of M2 are orthonormal: M2 = Q^T with Q 6x4 orthonormal columns.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(6, 4);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(6, 4);
  std::vector<Term> vocab;
  for (int i = 0; i < 4; ++i) vocab.push_back(en("r" + std::to_string(i)));
  const EmbeddingMatrix m2(vocab, q.transpose());
  const auto fit = fit_projection(m2, 4, 1.0, 3);
  EXPECT_LT((fit.svd.S - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((fit.op.matrix - fit.svd.V).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m2.data() * fit.op.matrix - fit.svd.U).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DeriveProjectionTest, FullSampleExactRelation) {
  const auto m1 = numbered(50, 10, "w", 4);
  const auto fit = fit_projection(m1, 10, 1.0, 5);
  ASSERT_EQ(fit.sampled_rows.size(), 50u);
  const Eigen::MatrixXd lhs = m1.data() * fit.op.matrix;
  const Eigen::MatrixXd rhs = fit.svd.U * fit.svd.S.cwiseSqrt().asDiagonal();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(DeriveProjectionTest, SampledRowsConsistentAndVarianceOrdered) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd data(2000, 12);
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = normal(rng);
  data = data * Eigen::VectorXd::LinSpaced(12, 3.0, 0.1).asDiagonal();
  std::vector<Term> vocab;
  for (int i = 0; i < 2000; ++i) vocab.push_back(en("w" + std::to_string(i)));
  const EmbeddingMatrix m1(vocab, data);
  const auto fit = fit_projection(m1, 4, 0.05, 77);
  ASSERT_EQ(fit.sampled_rows.size(), 100u);
  EXPECT_TRUE(std::is_sorted(fit.sampled_rows.begin(), fit.sampled_rows.end()));
  const Eigen::MatrixXd lhs = fit.sample * fit.op.matrix;
  const Eigen::MatrixXd rhs = fit.svd.U * fit.svd.S.cwiseSqrt().asDiagonal();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-6 * fit.svd.S.norm());
  const Eigen::VectorXd moments = lhs.colwise().squaredNorm().transpose() / static_cast<double>(lhs.rows());
  for (Eigen::Index j = 1; j < moments.size(); ++j) EXPECT_LE(moments(j), moments(j - 1) + 1e-9);
  // Determinism.
  EXPECT_EQ(derive_projection(m1, 4, 0.05, 77).matrix, fit.op.matrix);
  EXPECT_NE(derive_projection(m1, 4, 0.05, 78).matrix, fit.op.matrix);
}

TEST(DeriveProjectionTest, SingularValueFloorZeroesColumn) {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(30, 3);
  data.col(0).setLinSpaced(30, 1.0, 2.0);
  std::vector<Term> vocab;
  for (int i = 0; i < 30; ++i) vocab.push_back(en("w" + std::to_string(i)));
  const auto p = derive_projection(EmbeddingMatrix(vocab, data), 2, 1.0, 1);
  EXPECT_TRUE(p.matrix.allFinite());
  EXPECT_EQ(p.matrix.col(1), Eigen::Vector3d::Zero());
}

TEST(DeriveProjectionTest, Errors) {
  const auto m1 = numbered(30, 4, "w", 6);
  EXPECT_THROW(derive_projection(m1, 5, 1.0, 1), ArgumentError);
  EXPECT_THROW(derive_projection(m1, 2, 0.0, 1), ArgumentError);
  EXPECT_THROW(derive_projection(m1, 2, 1.5, 1), ArgumentError);
  EXPECT_THROW(derive_projection(m1, 2, 1.0, 1, {{"a", 3}}), ArgumentError);
  const EmbeddingMatrix zero(m1.vocab(), Eigen::MatrixXd::Zero(30, 4));
  EXPECT_THROW(derive_projection(zero, 2, 1.0, 1), DegenerateInputError);
}

TEST(ProjectTest, LinearityZeroRowAndShape) {
  const auto m1 = numbered(40, 6, "w", 10);
  const auto p = derive_projection(m1, 3, 1.0, 2);
  const EmbeddingMatrix pair({en("a"), en("b"), en("sum"), en("zero")}, [&] {
    Eigen::MatrixXd d(4, 6);
    d.row(0) = m1.data().row(0);
    d.row(1) = m1.data().row(1);
    d.row(2) = d.row(0) + d.row(1);
    d.row(3).setZero();
    return d;
  }());
  const auto out = project(pair, p);
  EXPECT_EQ(out.vocab(), pair.vocab());
  EXPECT_EQ(out.dim(), 3);
  EXPECT_LT((out.data().row(2) - out.data().row(0) - out.data().row(1)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(out.data().row(3), Eigen::RowVector3d::Zero());
  EXPECT_THROW(project(numbered(2, 5, "x", 1), p), ArgumentError);
}

TEST(ProjectionFileTest, RoundTrip) {
  TempDir dir;
  const auto m1 = numbered(40, 5, "w", 12);
  const auto p = derive_projection(m1, 2, 1.0, 2, {{"conceptnet", 3}, {"glove", 2}});
  save_projection(p, dir / "p.txt");
  const auto back = load_projection(dir / "p.txt");
  EXPECT_EQ(back.layout, p.layout);
  EXPECT_LT((back.matrix - p.matrix).cwiseAbs().maxCoeff(), 1e-6 * p.matrix.cwiseAbs().maxCoeff());
  EXPECT_THROW(load_projection(dir.write("bad.txt", "1 1\nnoslash 1\n")), ParseError);
  EXPECT_THROW(load_projection(dir.write("seq.txt", "2 1\na/0 1\na/2 1\n")), ParseError);
}

}  // namespace
}  // namespace kgembed

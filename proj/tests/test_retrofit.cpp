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
#include "instances.hpp"
#include "kgembed/retrofit.hpp"

namespace kgembed {
namespace {

Term en(const char* s) { return Term{"en", s}; }

EmbeddingMatrix rows(std::vector<Term> vocab, std::initializer_list<std::initializer_list<double>> values) {
  Eigen::MatrixXd data(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (double v : row) data(i, j++) = v;
    ++i;
  }
  return EmbeddingMatrix(std::move(vocab), std::move(data));
}

RetrofitConfig converge() { return {.iterations = 5000, .convergence_tol = 1e-12, .orig_weight = 1.0}; }

TEST(ExpandVocabularyTest, GraphOnlyTermGetsZeroRow) {
  const auto src = rows({en("a")}, {{1, 2}});
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("b"), 1.0}});
  const auto m = expand_vocabulary(src, g);
  ASSERT_EQ(m.vocab(), (std::vector<Term>{en("a"), en("b")}));
  EXPECT_EQ(m.data().row(1), Eigen::RowVector2d::Zero());
  EXPECT_EQ(m.data().row(0), Eigen::RowVector2d(1, 2));
}

TEST(ExpandVocabularyTest, DisjointGraphAppendedSorted) {
  const auto src = rows({en("a")}, {{1}});
  const KnowledgeGraph g({{"RelatedTo", en("c"), en("b"), 1.0}});
  EXPECT_EQ(expand_vocabulary(src, g).vocab(), (std::vector<Term>{en("a"), en("b"), en("c")}));
}

TEST(ExpandVocabularyTest, GraphInsideSourceIsIdentity) {
  const auto src = rows({en("b"), en("a")}, {{1}, {2}});
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("b"), 1.0}});
  const auto m = expand_vocabulary(src, g);
  EXPECT_EQ(m.vocab(), src.vocab());
  EXPECT_EQ(m.data(), src.data());
}

TEST(RetrofitTest, SingleEdgeToGraphOnlyTerm) {
  const auto out = retrofit(rows({en("a")}, {{1, 0}}), KnowledgeGraph({{"RelatedTo", en("a"), en("b"), 1.0}}), converge());
  EXPECT_LT((out.data().row(0) - Eigen::RowVector2d(1, 0)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((out.data().row(1) - Eigen::RowVector2d(1, 0)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RetrofitTest, IsolatedObservedTermUnchanged) {
  const auto src = rows({en("lonely"), en("a")}, {{0.3, -0.7}, {1, 0}});
  const auto out = retrofit(src, KnowledgeGraph({{"RelatedTo", en("a"), en("b"), 1.0}}), converge());
  EXPECT_EQ(out.data().row(0), src.data().row(0));
}

TEST(RetrofitTest, PathMidpointMatchesLinearSolve) {
  const auto src = rows({en("a"), en("c")}, {{1, 0}, {0, 1}});
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("b"), 1.0}, {"RelatedTo", en("b"), en("c"), 1.0}});
  const auto out = retrofit(src, g, converge());
  ASSERT_EQ(out.vocab(), (std::vector<Term>{en("a"), en("c"), en("b")}));
  // Stationarity: 2qa - qb = (1,0), 2qc - qb = (0,1), 2qb = qa + qc.
  // => qb = (1/2, 1/2), qa = (3/4, 1/4), qc = (1/4, 3/4).
  EXPECT_LT((out.data().row(0) - Eigen::RowVector2d(0.75, 0.25)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((out.data().row(1) - Eigen::RowVector2d(0.25, 0.75)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((out.data().row(2) - Eigen::RowVector2d(0.5, 0.5)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((out.data().row(2) - 0.5 * (out.data().row(0) + out.data().row(1))).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RetrofitTest, UnreachableGraphOnlyRowsStayZero) {
  const auto src = rows({en("a")}, {{1, 1}});
  const KnowledgeGraph g({{"RelatedTo", en("x"), en("y"), 1.0}});
  const auto out = retrofit(src, g, converge());
  EXPECT_EQ(out.data().row(1), Eigen::RowVector2d::Zero());
  EXPECT_EQ(out.data().row(2), Eigen::RowVector2d::Zero());
}

TEST(RetrofitTest, ZeroOrigWeightStillFinite) {
  const auto src = rows({en("a")}, {{1, 1}});
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("b"), 1.0}});
  const auto out = retrofit(src, g, {.iterations = 3, .convergence_tol = 0.0, .orig_weight = 0.0});
  EXPECT_TRUE(out.data().allFinite());
}

TEST(RetrofitTest, InvalidConfig) {
  const auto src = rows({en("a")}, {{1}});
  const KnowledgeGraph g(std::vector<Edge>{});
  EXPECT_THROW(retrofit(src, g, {.iterations = 0}), ArgumentError);
  EXPECT_THROW(retrofit(src, g, {.orig_weight = -1.0}), ArgumentError);
}

TEST(RetrofitTest, OneSweepIsWeightedNeighborAverage) {
  const auto src = rows({en("a"), en("c")}, {{2, 0}, {0, 4}});
  const KnowledgeGraph g({{"RelatedTo", en("a"), en("b"), 1.0}, {"RelatedTo", en("c"), en("b"), 3.0}});
  const auto out = retrofit(src, g, {.iterations = 1});
  EXPECT_LT((out.data().row(2) - Eigen::RowVector2d(0.5, 3.0)).cwiseAbs().maxCoeff(), 1e-12);
  // a: (1*(2,0) + 1*(0,0)) / 2
  EXPECT_LT((out.data().row(0) - Eigen::RowVector2d(1.0, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RetrofitTest, EarlyExitOnTolerance) {
  const auto src = rows({en("a")}, {{1, 0}});
  RetrofitProblem p(src, KnowledgeGraph({{"RelatedTo", en("a"), en("b"), 1.0}}), 1.0);
  const auto r = p.solve({.iterations = 1000, .convergence_tol = 1e-6}, p.original());
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.sweeps, 1000);
  EXPECT_LT(r.last_change, 1e-6);
}

TEST(RetrofitPropertyTest, MatchesOracleAndObjectiveDecreases) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto inst = testing::random_retrofit_instance(rng);
    RetrofitProblem p(inst.source, inst.graph, 1.0);
    Eigen::MatrixXd q = p.original();
    double previous = p.objective(q);
    for (int s = 0; s < 50; ++s) {
      q = p.sweep(q);
      const double current = p.objective(q);
      EXPECT_LE(current, previous * (1.0 + 1e-12) + 1e-15);
      previous = current;
    }
    const auto solved = p.solve(converge(), p.original());
    const auto expected = testing::retrofit_oracle(inst, p.expanded().vocab(), 1.0);
    EXPECT_LT((solved.q - expected).cwiseAbs().maxCoeff(), 1e-4) << "trial " << trial;
  }
}

TEST(RetrofitPropertyTest, FixedPointResidual) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  const RetrofitConfig cfg{.iterations = 10000, .convergence_tol = 1e-6, .orig_weight = 1.0};
  for (int trial = 0; trial < 25; ++trial) {
    // A path with light weights keeps denominators small.
    const int n = 3 + trial % 6;
    std::vector<Edge> edges;
    std::vector<Term> vocab;
    for (int i = 0; i + 1 < n; ++i) {
      edges.push_back({"RelatedTo", Term{"en", "p" + std::to_string(i)}, Term{"en", "p" + std::to_string(i + 1)}, weight(rng)});
    }
    for (int i = 0; i < n; i += 2) vocab.push_back(Term{"en", "p" + std::to_string(i)});
    const EmbeddingMatrix src(vocab, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(vocab.size()), 2));
    RetrofitProblem p(src, KnowledgeGraph(std::move(edges)), cfg.orig_weight);
    const auto r = p.solve(cfg, p.original());
    ASSERT_TRUE(r.converged);
    EXPECT_LT(p.stationarity_residual(r.q), 10 * cfg.convergence_tol);
  }
}

TEST(RetrofitPropertyTest, InitializationIndependent) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testing::random_retrofit_instance(rng);
    RetrofitProblem p(inst.source, inst.graph, 1.0);
    const auto expected = testing::retrofit_oracle(inst, p.expanded().vocab(), 1.0);
    Eigen::MatrixXd init = p.original();
    for (Eigen::Index i = inst.source.rows(); i < init.rows(); ++i) {
      for (Eigen::Index j = 0; j < init.cols(); ++j) init(i, j) = normal(rng);
    }
    const auto a = p.solve(converge(), p.original()).q;
    const auto b = p.solve(converge(), init).q;
    // Compare only rows connected to an observed term; the oracle leaves others at zero.
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (expected.row(i).isZero(0.0) && a.row(i).isZero(0.0)) continue;
      EXPECT_LT((a.row(i) - b.row(i)).cwiseAbs().maxCoeff(), 1e-4) << "trial " << trial << " row " << i;
    }
  }
}

}  // namespace
}  // namespace kgembed

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
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/linalg.hpp"
#include "kgembed/seed.hpp"

namespace kgembed {

/// Row-count thresholds for admitting source terms that are not in the graph.
struct VocabPolicy {
  std::size_t both_threshold = 500000;
  std::size_t either_threshold = 200000;
};

/// `ranks[s]` is the 0-based row of a term in source s, if present. A term is
/// admitted when it lies within the first `both_threshold` rows of every
/// source and within the first `either_threshold` rows of at least one.
inline bool vocab_admits(std::span<const std::optional<std::size_t>> ranks, const VocabPolicy& policy) {
  if (ranks.empty()) return false;
  bool any_either = false;
  for (const auto& r : ranks) {
    if (!r || *r >= policy.both_threshold) return false;
    any_either = any_either || *r < policy.either_threshold;
  }
  return any_either;
}

/// Graph terms (sorted) followed by the admitted source terms not already in
/// the graph (sorted). Sources are compared after case folding, using the
/// earliest row of each folded term; their file order is taken as frequency
/// order.
inline std::vector<Term> select_vocabulary(std::span<const EmbeddingMatrix> sources, const KnowledgeGraph& g,
                                           const VocabPolicy& policy = {}) {
  if (sources.empty()) throw ArgumentError("select_vocabulary needs at least one source");
  if (policy.either_threshold > policy.both_threshold) {
    throw ArgumentError("either_threshold must not exceed both_threshold");
  }
  std::vector<std::unordered_map<Term, std::size_t>> first_row(sources.size());
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& vocab = sources[s].vocab();
    const std::size_t limit = std::min(vocab.size(), policy.both_threshold);
    for (std::size_t i = 0; i < limit; ++i) {
      first_row[s].emplace(Term{fold_case(vocab[i].lang), normalize_text(vocab[i].text)}, i);
    }
  }
  std::set<Term> extra;
  std::vector<std::optional<std::size_t>> ranks(sources.size());
  for (const auto& [term, row] : first_row[0]) {
    if (g.contains(term)) continue;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      auto it = first_row[s].find(term);
      ranks[s] = it == first_row[s].end() ? std::nullopt : std::optional<std::size_t>(it->second);
    }
    if (vocab_admits(ranks, policy)) extra.insert(term);
  }
  std::vector<Term> out = g.nodes();
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

/// Position of one source's columns inside the concatenated feature space.
struct SourceBlock {
  std::string id;
  Eigen::Index dim = 0;

  friend bool operator==(const SourceBlock&, const SourceBlock&) = default;
};

/// Concatenates the sources' rows for every vocabulary term, filling zeros
/// where a source has no row.
inline EmbeddingMatrix build_unified(std::span<const EmbeddingMatrix> retrofitted, const std::vector<Term>& vocab) {
  if (vocab.empty()) throw ArgumentError("build_unified: empty vocabulary");
  Eigen::Index k = 0;
  for (const auto& m : retrofitted) k += m.dim();
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.size()), k);
  Eigen::Index offset = 0;
  for (const auto& m : retrofitted) {
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (auto r = m.index_of(vocab[i])) {
        data.block(static_cast<Eigen::Index>(i), offset, 1, m.dim()) = m.row(*r);
      }
    }
    offset += m.dim();
  }
  return EmbeddingMatrix(vocab, std::move(data));
}

/// k x k' operator V diag(S)^{-1/2} mapping concatenated features to reduced ones.
struct ProjectionOperator {
  Eigen::MatrixXd matrix;
  std::vector<SourceBlock> layout;

  Eigen::Index input_dim() const { return matrix.rows(); }
  Eigen::Index output_dim() const { return matrix.cols(); }
};

struct ProjectionFit {
  ProjectionOperator op;
  /// Rows of M1 used for the fit, ascending.
  std::vector<std::size_t> sampled_rows;
  Eigen::MatrixXd sample;
  TruncatedSVD svd;
};

/// Singular values below this fraction of the largest get a zero column in P.
inline constexpr double kSingularValueFloor = 1e-10;

/// Number of rows to sample: ceil(fraction * rows), or all rows when that
/// falls below min(20 k', rows).
inline std::size_t projection_sample_size(std::size_t rows, Eigen::Index reduced_dim, double sample_fraction) {
  const auto wanted = static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(rows)));
  const std::size_t floor = std::min(rows, static_cast<std::size_t>(20 * reduced_dim));
  return wanted < floor ? rows : std::min(wanted, rows);
}

inline ProjectionFit fit_projection(const EmbeddingMatrix& m1, Eigen::Index reduced_dim, double sample_fraction,
                                    std::uint64_t seed, std::vector<SourceBlock> layout = {},
                                    const SvdOptions& svd_options = {}) {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw ArgumentError("sample_fraction must be in (0, 1]");
  }
  if (reduced_dim < 1 || reduced_dim > m1.dim()) {
    throw ArgumentError("reduced dimension " + std::to_string(reduced_dim) + " must be in [1, " +
                        std::to_string(m1.dim()) + "]");
  }
  if (!layout.empty()) {
    Eigen::Index total = 0;
    for (const auto& b : layout) total += b.dim;
    if (total != m1.dim()) throw ArgumentError("source layout does not cover the unified dimension");
  }
  const auto rows = static_cast<std::size_t>(m1.rows());
  const std::size_t count = projection_sample_size(rows, reduced_dim, sample_fraction);

  ProjectionFit fit;
  if (count == rows) {
    fit.sampled_rows.resize(rows);
    std::iota(fit.sampled_rows.begin(), fit.sampled_rows.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> all(rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, "projection.sample"));
    fit.sampled_rows.reserve(count);
    std::sample(all.begin(), all.end(), std::back_inserter(fit.sampled_rows), count, rng);
  }
  if (static_cast<Eigen::Index>(fit.sampled_rows.size()) < reduced_dim) {
    throw ArgumentError("only " + std::to_string(fit.sampled_rows.size()) + " rows available for a rank-" +
                        std::to_string(reduced_dim) + " projection");
  }
  fit.sample.resize(static_cast<Eigen::Index>(fit.sampled_rows.size()), m1.dim());
  for (std::size_t i = 0; i < fit.sampled_rows.size(); ++i) {
    fit.sample.row(static_cast<Eigen::Index>(i)) = m1.row(fit.sampled_rows[i]);
  }
  if (fit.sample.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateInputError("sampled rows of the unified matrix are all zero");
  }
  fit.svd = truncated_svd(fit.sample, reduced_dim, derive_seed(seed, "projection.svd"), svd_options);
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(reduced_dim);
  const double smax = fit.svd.S(0);
  for (Eigen::Index j = 0; j < reduced_dim; ++j) {
    const double s = fit.svd.S(j);
    if (s >= kSingularValueFloor * smax && s > 0.0) inv_sqrt(j) = 1.0 / std::sqrt(s);
  }
  fit.op.matrix = scale_columns(fit.svd.V, inv_sqrt);
  fit.op.layout = layout.empty() ? std::vector<SourceBlock>{{"m1", m1.dim()}} : std::move(layout);
  return fit;
}

/// Samples rows of M1 and returns V diag(S)^{-1/2} from their truncated SVD.
inline ProjectionOperator derive_projection(const EmbeddingMatrix& m1, Eigen::Index reduced_dim,
                                            double sample_fraction, std::uint64_t seed,
                                            std::vector<SourceBlock> layout = {}) {
  return fit_projection(m1, reduced_dim, sample_fraction, seed, std::move(layout)).op;
}

/// M P, keeping the vocabulary.
inline EmbeddingMatrix project(const EmbeddingMatrix& m, const ProjectionOperator& p) {
  if (m.dim() != p.input_dim()) {
    throw ArgumentError("project: matrix has " + std::to_string(m.dim()) + " columns, operator expects " +
                        std::to_string(p.input_dim()));
  }
  return EmbeddingMatrix(m.vocab(), m.data() * p.matrix);
}

/// Rows are labelled "<source id>/<feature index>".
inline void save_projection(const ProjectionOperator& p, const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(p.input_dim()));
  for (const auto& block : p.layout) {
    for (Eigen::Index j = 0; j < block.dim; ++j) tokens.push_back(block.id + "/" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(tokens.size()) != p.input_dim()) {
    throw ArgumentError("projection layout does not match its row count");
  }
  detail::write_text_matrix(path, tokens, p.matrix);
}

inline ProjectionOperator load_projection(const std::filesystem::path& path) {
  auto raw = detail::read_text_matrix(path);
  if (raw.duplicates_skipped > 0) throw ParseError(path.string(), 0, "duplicate projection row labels");
  ProjectionOperator p;
  p.matrix = std::move(raw.data);
  for (std::size_t i = 0; i < raw.tokens.size(); ++i) {
    const std::string& tok = raw.tokens[i];
    const auto slash = tok.rfind('/');
    if (slash == std::string::npos || slash == 0) {
      throw ParseError(path.string(), 0, "row label '" + tok + "' is not of the form source/index");
    }
    const std::string id = tok.substr(0, slash);
    if (p.layout.empty() || p.layout.back().id != id) p.layout.push_back({id, 0});
    if (tok.substr(slash + 1) != std::to_string(p.layout.back().dim)) {
      throw ParseError(path.string(), 0, "row label '" + tok + "' out of sequence");
    }
    ++p.layout.back().dim;
  }
  return p;
}

}  // namespace kgembed

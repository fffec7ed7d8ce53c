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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgembed/error.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/term.hpp"

namespace kgembed {

/// An ordered term vocabulary paired with a dense row-per-term matrix.
///
/// Rows keep the order they were given in. Terms are unique; all entries are
/// finite. Terms read from third-party embedding files are not case-folded
/// until `standardize` runs.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  /// Empty matrix with a fixed dimensionality.
  explicit EmbeddingMatrix(Eigen::Index dim) : data_(0, dim) {}

  EmbeddingMatrix(std::vector<Term> vocab, Eigen::MatrixXd data)
      : vocab_(std::move(vocab)), data_(std::move(data)) {
    if (static_cast<Eigen::Index>(vocab_.size()) != data_.rows()) {
      throw ArgumentError("vocabulary size " + std::to_string(vocab_.size()) +
                          " does not match row count " + std::to_string(data_.rows()));
    }
    if (!data_.allFinite()) throw ArgumentError("embedding matrix has non-finite entries");
    index_.reserve(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (!index_.emplace(vocab_[i], i).second) {
        throw ArgumentError("duplicate term " + vocab_[i].str() + " in embedding vocabulary");
      }
    }
  }

  const std::vector<Term>& vocab() const { return vocab_; }
  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }
  bool empty() const { return vocab_.empty(); }

  bool contains(const Term& t) const { return index_.contains(t); }

  std::optional<std::size_t> index_of(const Term& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

 private:
  std::vector<Term> vocab_;
  std::unordered_map<Term, std::size_t> index_;
  Eigen::MatrixXd data_;
};

/// Row for `t`, or nothing. No normalization or fallback happens here.
inline std::optional<Eigen::VectorXd> lookup(const EmbeddingMatrix& m, const Term& t) {
  auto i = m.index_of(t);
  if (!i) return std::nullopt;
  return Eigen::VectorXd(m.row(*i).transpose());
}

namespace detail {

/// Token-labelled numeric matrix in word2vec text layout.
struct TextMatrix {
  std::vector<std::string> tokens;
  Eigen::MatrixXd data;
  std::size_t duplicates_skipped = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::optional<std::size_t> parse_count(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Reads `[N d]\n token v1 .. vd` lines. The header is recognised when the
/// first non-blank line is exactly two unsigned integers. Later occurrences of
/// a repeated token are skipped.
inline TextMatrix read_text_matrix(const std::filesystem::path& path,
                                   std::optional<std::size_t> max_rows = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  TextMatrix out;
  std::vector<double> values;
  std::unordered_map<std::string, std::size_t> seen;
  std::optional<std::size_t> dim;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t limit = max_rows.value_or(static_cast<std::size_t>(-1));
  while (out.tokens.size() < limit && std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      if (fields.size() == 2) {
        auto n = parse_count(fields[0]);
        auto d = parse_count(fields[1]);
        if (n && d) {
          dim = *d;
          continue;
        }
      }
    }
    const std::size_t row_dim = fields.size() - 1;
    if (!dim) dim = row_dim;
    if (row_dim != *dim) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(*dim) + " values, got " + std::to_string(row_dim));
    }
    std::string token(fields[0]);
    if (seen.contains(token)) {
      ++out.duplicates_skipped;
      continue;
    }
    const std::size_t base = values.size();
    values.resize(base + row_dim);
    for (std::size_t j = 0; j < row_dim; ++j) {
      auto v = parse_double(fields[j + 1]);
      if (!v) throw ParseError(path.string(), line_no, "non-numeric value '" + std::string(fields[j + 1]) + "'");
      if (!std::isfinite(*v)) throw ParseError(path.string(), line_no, "non-finite value");
      values[base + j] = *v;
    }
    seen.emplace(token, out.tokens.size());
    out.tokens.push_back(std::move(token));
  }
  if (in.bad()) throw IoError("error reading matrix file " + path.string());
  const auto n = static_cast<Eigen::Index>(out.tokens.size());
  const auto d = static_cast<Eigen::Index>(dim.value_or(0));
  out.data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  return out;
}

inline void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  out.append(buf, ptr);
}

inline void write_text_matrix(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                              const Eigen::MatrixXd& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  std::string buffer = std::to_string(data.rows()) + " " + std::to_string(data.cols()) + "\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    buffer += tokens[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      buffer.push_back(' ');
      append_number(buffer, data(i, j) == 0.0 ? 0.0 : data(i, j));
    }
    buffer.push_back('\n');
    if (buffer.size() > (1u << 20)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.flush();
  if (!out) throw IoError("error writing matrix file " + path.string());
}

/// Splits "lang:text" without normalizing either part.
inline Term split_raw_term(std::string_view token, const std::filesystem::path& path, std::size_t row) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos || colon + 1 == token.size() ||
      !valid_lang(fold_case(token.substr(0, colon)))) {
    throw ParseError(path.string(), 0,
                     "row " + std::to_string(row + 1) + ": token '" + std::string(token) +
                         "' is not of the form lang:text");
  }
  return Term{std::string(token.substr(0, colon)), std::string(token.substr(colon + 1))};
}

}  // namespace detail

/// Loads a word2vec/GloVe text file, keeping file row order.
///
/// With `lang` set, every token is tagged with that language as-is. Without
/// it, tokens must already be "lang:text" (the format `save_text_embeddings`
/// writes). Case is preserved either way.
inline EmbeddingMatrix load_text_embeddings(const std::filesystem::path& path,
                                            const std::optional<std::string>& lang = std::nullopt,
                                            std::optional<std::size_t> max_rows = std::nullopt) {
  if (lang && !valid_lang(*lang)) throw ArgumentError("invalid language code '" + *lang + "'");
  if (max_rows && *max_rows == 0) throw ArgumentError("max_rows must be positive");
  auto raw = detail::read_text_matrix(path, max_rows);
  std::vector<Term> vocab;
  vocab.reserve(raw.tokens.size());
  for (std::size_t i = 0; i < raw.tokens.size(); ++i) {
    if (lang) {
      vocab.push_back(Term{*lang, std::move(raw.tokens[i])});
    } else {
      vocab.push_back(detail::split_raw_term(raw.tokens[i], path, i));
    }
  }
  return EmbeddingMatrix(std::move(vocab), std::move(raw.data));
}

/// Writes "N d" then one "lang:text v1 .. vd" line per row, 9 significant digits.
inline void save_text_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  tokens.reserve(m.vocab().size());
  for (const Term& t : m.vocab()) tokens.push_back(t.str());
  detail::write_text_matrix(path, tokens, m.data());
}

/// Case-folds terms, merging rows whose terms collide into their mean at the
/// earliest colliding position, then scales every nonzero column to unit L1
/// norm.
inline EmbeddingMatrix standardize(const EmbeddingMatrix& m) {
  if (m.empty()) throw ArgumentError("cannot standardize an empty embedding matrix");
  std::vector<Term> vocab;
  std::vector<std::size_t> target(static_cast<std::size_t>(m.rows()));
  std::unordered_map<Term, std::size_t> slot;
  for (std::size_t i = 0; i < m.vocab().size(); ++i) {
    Term folded{fold_case(m.vocab()[i].lang), normalize_text(m.vocab()[i].text)};
    auto [it, inserted] = slot.emplace(folded, vocab.size());
    if (inserted) vocab.push_back(std::move(folded));
    target[i] = it->second;
  }
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.size()), m.dim());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(data.rows());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(target[i]);
    data.row(r) += m.row(i);
    counts(r) += 1.0;
  }
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    if (counts(r) > 1.0) data.row(r) /= counts(r);
  }
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double norm = data.col(c).lpNorm<1>();
    if (norm > 0.0) data.col(c) /= norm;
  }
  return EmbeddingMatrix(std::move(vocab), std::move(data));
}

}  // namespace kgembed

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
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/term.hpp"

namespace kgembed {

/// Which fallback stage produced a vector.
enum class Provenance { kDirect, kNeighbor, kCognate, kPrefix };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kDirect:
      return "DIRECT";
    case Provenance::kNeighbor:
      return "NEIGHBOR";
    case Provenance::kCognate:
      return "COGNATE";
    case Provenance::kPrefix:
      return "PREFIX";
  }
  return "UNKNOWN";
}

struct OOVConfig {
  bool enable_neighbor_average = true;
  bool enable_english_cognate = true;
  bool enable_prefix_fallback = true;
  /// Shortest prefix (in code points) the letter-dropping loop will try.
  std::size_t min_prefix_len = 1;
  std::string english_lang_code = "en";
};

struct Resolution {
  Eigen::VectorXd vector;
  Provenance provenance = Provenance::kDirect;
};

/// Fallback chain DIRECT -> NEIGHBOR -> COGNATE -> PREFIX over a final
/// embedding matrix and the graph it was built from. Holds references; the
/// matrix and graph must outlive it.
class Resolver {
 public:
  Resolver(const EmbeddingMatrix& m, const KnowledgeGraph& g, OOVConfig cfg = {})
      : m_(m), g_(g), cfg_(std::move(cfg)) {
    if (cfg_.min_prefix_len < 1) throw ArgumentError("min_prefix_len must be >= 1");
    for (std::size_t i = 0; i < m_.vocab().size(); ++i) {
      by_lang_[m_.vocab()[i].lang].emplace_back(m_.vocab()[i].text, i);
    }
    for (auto& [_, list] : by_lang_) std::sort(list.begin(), list.end());
  }

  const OOVConfig& config() const { return cfg_; }

  /// Resolves `t`, or returns nothing when every enabled stage fails. When
  /// `prefix_trace` is given it receives every prefix the PREFIX stage tried.
  std::optional<Resolution> resolve(const Term& t, std::vector<std::string>* prefix_trace = nullptr) const {
    if (auto v = lookup(m_, t)) return Resolution{*std::move(v), Provenance::kDirect};
    if (cfg_.enable_neighbor_average) {
      if (auto v = neighbor_average(t)) return Resolution{*std::move(v), Provenance::kNeighbor};
    }
    if (cfg_.enable_english_cognate) {
      if (auto v = lookup(m_, Term{cfg_.english_lang_code, t.text})) {
        return Resolution{*std::move(v), Provenance::kCognate};
      }
    }
    if (cfg_.enable_prefix_fallback) {
      if (auto v = prefix_mean(t, prefix_trace)) return Resolution{*std::move(v), Provenance::kPrefix};
    }
    return std::nullopt;
  }

  /// Mean of the vectors of t's graph neighbors that have one.
  std::optional<Eigen::VectorXd> neighbor_average(const Term& t) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m_.dim());
    std::size_t found = 0;
    for (const Neighbor& nb : g_.neighbors(t)) {
      if (auto i = m_.index_of(nb.term)) {
        sum += m_.row(*i).transpose();
        ++found;
      }
    }
    if (found == 0) return std::nullopt;
    return Eigen::VectorXd(sum / static_cast<double>(found));
  }

  /// Drops trailing letters from t.text until some same-language vocabulary
  /// term starts with the remaining prefix; averages all such terms.
  std::optional<Eigen::VectorXd> prefix_mean(const Term& t, std::vector<std::string>* trace = nullptr) const {
    auto lang_it = by_lang_.find(t.lang);
    std::string_view prefix = t.text;
    while (!prefix.empty() && utf8::length(prefix) >= cfg_.min_prefix_len) {
      if (trace != nullptr) trace->emplace_back(prefix);
      if (lang_it != by_lang_.end()) {
        const auto& list = lang_it->second;
        auto it = std::lower_bound(list.begin(), list.end(), prefix,
                                   [](const auto& entry, std::string_view p) { return entry.first < p; });
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(m_.dim());
        std::size_t found = 0;
        for (; it != list.end() && std::string_view(it->first).starts_with(prefix); ++it) {
          sum += m_.row(it->second).transpose();
          ++found;
        }
        if (found > 0) return Eigen::VectorXd(sum / static_cast<double>(found));
      }
      prefix = utf8::drop_last(prefix);
    }
    return std::nullopt;
  }

 private:
  const EmbeddingMatrix& m_;
  const KnowledgeGraph& g_;
  OOVConfig cfg_;
  std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> by_lang_;
};

inline std::optional<Resolution> resolve(const Term& t, const EmbeddingMatrix& m, const KnowledgeGraph& g,
                                         const OOVConfig& cfg = {}) {
  return Resolver(m, g, cfg).resolve(t);
}

/// Midpoint of the gold similarity scale, used when a pair cannot be resolved.
inline double resolve_pair_default(double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("similarity scale needs lo < hi");
  return (lo + hi) / 2.0;
}

}  // namespace kgembed

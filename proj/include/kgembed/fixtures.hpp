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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/eval.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/seed.hpp"
#include "kgembed/term.hpp"

namespace kgembed::fixtures {

/// A group of terms planted as mutually similar.
struct Cluster {
  /// Terms in the source language; these get rows in the embedding sources.
  std::vector<std::string> source_words;
  /// Translations, aligned index-by-index with `source_words`.
  std::vector<std::string> target_words;
  /// Present in the graph only, linked to every source word.
  std::string graph_only;
};

struct FixtureSpec {
  std::string source_lang = "en";
  std::string target_lang = "de";
  std::vector<Cluster> clusters;
  std::size_t filler_words = 24;
  std::vector<Eigen::Index> source_dims = {8, 6};
  double noise = 0.25;
  std::size_t corpus_units = 80;
  std::uint64_t seed = 20170803;

  void validate() const {
    std::set<std::string> seen;
    for (const auto& c : clusters) {
      if (c.source_words.size() + c.target_words.size() < 2) throw ArgumentError("cluster needs >= 2 terms");
      if (c.target_words.size() != c.source_words.size()) {
        throw ArgumentError("cluster translations must align with source words");
      }
      for (const auto* list : {&c.source_words, &c.target_words}) {
        for (const auto& w : *list) {
          if (!seen.insert((list == &c.source_words ? source_lang : target_lang) + ":" + w).second) {
            throw ArgumentError("clusters are not disjoint: " + w);
          }
        }
      }
    }
    if (source_dims.empty()) throw ArgumentError("fixture needs at least one source");
  }
};

/// Default bilingual spec with seven three-word clusters.
inline FixtureSpec default_spec() {
  FixtureSpec s;
  s.clusters = {
      {{"cat", "kitten", "feline"}, {"katze", "kätzchen", "mieze"}, "tomcat"},
      {{"dog", "puppy", "hound"}, {"hund", "welpe", "köter"}, "doggo"},
      {{"car", "automobile", "vehicle"}, {"auto", "wagen", "fahrzeug"}, "sedan"},
      {{"house", "home", "dwelling"}, {"haus", "heim", "wohnung"}, "cottage"},
      {{"happy", "glad", "joyful"}, {"glücklich", "froh", "fröhlich"}, "cheerful"},
      {{"river", "stream", "creek"}, {"fluss", "bach", "strom"}, "brook"},
      {{"hotel", "inn", "motel"}, {"gasthof", "herberge", "pension"}, "hostel"},
  };
  return s;
}

struct NamedSource {
  std::string id;
  /// Raw rows in frequency order, tokens untagged and not case-folded.
  EmbeddingMatrix matrix;
};

struct FixtureSet {
  std::vector<Edge> edges;
  std::vector<NamedSource> sources;
  std::vector<SimilarityDataset> datasets;
  std::vector<std::vector<Term>> corpus;
  std::vector<Term> graph_only_terms;
  /// Scaled-down vocabulary thresholds matching the fixture source sizes.
  std::size_t both_threshold = 0;
  std::size_t either_threshold = 0;
};

namespace detail {

inline Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index d, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Rounds to two decimals so gold scores serialize compactly.
inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace detail

/// Generates a graph, embedding sources, similarity datasets and an aligned
/// corpus with planted cluster structure. Pure function of `spec`.
inline FixtureSet generate(const FixtureSpec& spec) {
  spec.validate();
  FixtureSet out;
  std::mt19937_64 rng(derive_seed(spec.seed, "fixtures"));
  const auto src = [&](const std::string& w) { return make_term(spec.source_lang, w); };
  const auto tgt = [&](const std::string& w) { return make_term(spec.target_lang, w); };

  // Graph.
  for (const auto& c : spec.clusters) {
    const double w = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? 1.0 : 2.0;
    for (std::size_t i = 0; i < c.source_words.size(); ++i) {
      for (std::size_t j = i + 1; j < c.source_words.size(); ++j) {
        out.edges.push_back({"RelatedTo", src(c.source_words[i]), src(c.source_words[j]), w});
        out.edges.push_back({"Synonym", tgt(c.target_words[i]), tgt(c.target_words[j]), 1.0});
      }
      out.edges.push_back({"Synonym", tgt(c.target_words[i]), src(c.source_words[i]), 1.0});
      out.edges.push_back({"IsA", src(c.graph_only), src(c.source_words[i]), 1.0});
    }
    out.graph_only_terms.push_back(src(c.graph_only));
  }
  // Structure the filter must remove: a negative relation, a long phrase, a
  // low-degree node.
  for (std::size_t k = 0; k + 1 < spec.clusters.size(); ++k) {
    out.edges.push_back({"Antonym", src(spec.clusters[k].source_words[0]),
                         src(spec.clusters[k + 1].source_words[1]), 1.0});
  }
  if (!spec.clusters.empty()) {
    const Term phrase = make_term(spec.source_lang, "the cat sat down");
    for (const auto& w : spec.clusters[0].source_words) out.edges.push_back({"RelatedTo", phrase, src(w), 1.0});
    out.edges.push_back({"RelatedTo", make_term(spec.source_lang, "rarity"), src(spec.clusters[0].source_words[0]), 1.0});
  }

  // Sources: cluster members share a per-source centroid.
  std::vector<std::string> fillers;
  for (std::size_t i = 0; i < spec.filler_words; ++i) {
    // Base-26 letters, at least two: filleraa, fillerab, ..., fillerzz, fillerbaa, ...
    std::string digits;
    for (std::size_t v = i; digits.size() < 2 || v > 0; v /= 26) digits.insert(digits.begin(), static_cast<char>('a' + v % 26));
    fillers.push_back("filler" + digits);
  }
  for (std::size_t s = 0; s < spec.source_dims.size(); ++s) {
    const Eigen::Index d = spec.source_dims[s];
    std::vector<std::pair<std::string, Eigen::VectorXd>> rows;
    for (std::size_t ci = 0; ci < spec.clusters.size(); ++ci) {
      const auto& c = spec.clusters[ci];
      const Eigen::VectorXd centroid = detail::gaussian(rng, d, 1.0);
      for (std::size_t i = 0; i < c.source_words.size(); ++i) {
        // The second source lacks the last member of every other cluster.
        if (s == 1 && i + 1 == c.source_words.size() && ci % 2 == 0) continue;
        rows.emplace_back(c.source_words[i], centroid + detail::gaussian(rng, d, spec.noise));
      }
    }
    for (const auto& f : fillers) rows.emplace_back(f, detail::gaussian(rng, d, 1.0));
    std::shuffle(rows.begin(), rows.end(), rng);
    if (s == 0 && !spec.clusters.empty()) {
      // A capitalized variant that standardization folds into the lowercase row.
      const std::string& word = spec.clusters[0].source_words[0];
      auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.first == word; });
      std::string cap = word;
      cap[0] = static_cast<char>(cap[0] - 'a' + 'A');
      Eigen::VectorXd variant = it->second + detail::gaussian(rng, d, spec.noise);
      rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(rows.size() / 2), {cap, std::move(variant)});
    }
    std::vector<Term> vocab;
    Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      vocab.push_back(Term{spec.source_lang, rows[i].first});
      data.row(static_cast<Eigen::Index>(i)) = rows[i].second;
    }
    out.sources.push_back({std::string(1, static_cast<char>('a' + s)), EmbeddingMatrix(std::move(vocab), std::move(data))});
  }
  const std::size_t smallest = std::min_element(out.sources.begin(), out.sources.end(), [](const auto& a, const auto& b) {
                                 return a.matrix.rows() < b.matrix.rows();
                               })->matrix.rows();
  out.both_threshold = smallest - smallest / 8;
  out.either_threshold = smallest / 2;

  // Datasets: within-cluster pairs score high, across-cluster pairs low.
  const auto within = [&] { return detail::round2(detail::uniform(rng, 3.0, 4.0)); };
  const auto across = [&] { return detail::round2(detail::uniform(rng, 0.0, 1.0)); };
  SimilarityDataset mono_src{spec.source_lang, {}, 0.0, 4.0};
  SimilarityDataset mono_tgt{spec.target_lang, {}, 0.0, 4.0};
  SimilarityDataset cross{spec.source_lang + "-" + spec.target_lang, {}, 0.0, 4.0};
  const std::size_t nc = spec.clusters.size();
  for (std::size_t ci = 0; ci < nc; ++ci) {
    const auto& c = spec.clusters[ci];
    const auto& o = spec.clusters[(ci + 1) % nc];
    for (std::size_t i = 0; i < c.source_words.size(); ++i) {
      const std::size_t j = (i + 1) % c.source_words.size();
      mono_src.pairs.push_back({src(c.source_words[i]), src(c.source_words[j]), within()});
      mono_src.pairs.push_back({src(c.source_words[i]), src(o.source_words[j]), across()});
      mono_tgt.pairs.push_back({tgt(c.target_words[i]), tgt(c.target_words[j]), within()});
      mono_tgt.pairs.push_back({tgt(c.target_words[i]), tgt(o.target_words[i]), across()});
      cross.pairs.push_back({src(c.source_words[i]), tgt(c.target_words[j]), within()});
      cross.pairs.push_back({src(c.source_words[i]), tgt(o.target_words[i]), across()});
    }
    mono_src.pairs.push_back({src(c.graph_only), src(c.source_words[0]), within()});
  }
  if (nc >= 2) {
    const auto& first = spec.clusters[0];
    const auto& last = spec.clusters[nc - 1];
    // Resolved by dropping letters: "<word>n" extends a target-language term.
    mono_tgt.pairs.push_back({tgt(first.target_words[0] + "n"), tgt(first.target_words[2]), within()});
    // Spelled like a source-language word but absent from the target language.
    mono_tgt.pairs.push_back({tgt(last.source_words[0]), tgt(last.target_words[1]), within()});
    // No vector for either strategy: an unseen language.
    cross.pairs.push_back({make_term("fa", "gorbeh"), tgt(last.target_words[0]), across()});
  }
  out.datasets = {mono_src, mono_tgt, cross};

  // Aligned corpus: units mix translations of one cluster plus a filler.
  for (std::size_t u = 0; u < spec.corpus_units && nc > 0; ++u) {
    const auto& c = spec.clusters[std::uniform_int_distribution<std::size_t>(0, nc - 1)(rng)];
    std::vector<Term> unit;
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, c.source_words.size() - 1)(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, c.source_words.size() - 1)(rng);
    unit.push_back(src(c.source_words[i]));
    unit.push_back(tgt(c.target_words[i]));
    unit.push_back(src(c.source_words[j]));
    if (!fillers.empty()) {
      unit.push_back(src(fillers[std::uniform_int_distribution<std::size_t>(0, fillers.size() - 1)(rng)]));
    }
    out.corpus.push_back(std::move(unit));
  }
  return out;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("error writing " + path.string());
}

inline std::string number(double v) {
  std::string s;
  kgembed::detail::append_number(s, v);
  return s;
}

}  // namespace detail

/// Writes graph.tsv, source_<id>.txt, <dataset name>.tsv, corpus.txt and
/// build.conf into `dir`. Returns the written file names.
inline std::vector<std::string> write_fixtures(const FixtureSet& set, const std::filesystem::path& dir,
                                               std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& content) {
    detail::write_file(dir / name, content);
    written.push_back(name);
  };

  std::string graph = "# relation\tstart\tend\tweight\n";
  for (const auto& e : set.edges) {
    graph += e.relation + "\t" + e.start.str() + "\t" + e.end.str() + "\t" + detail::number(e.weight) + "\n";
  }
  emit("graph.tsv", graph);

  for (const auto& s : set.sources) {
    std::vector<std::string> tokens;
    for (const auto& t : s.matrix.vocab()) tokens.push_back(t.text);
    kgembed::detail::write_text_matrix(dir / ("source_" + s.id + ".txt"), tokens, s.matrix.data());
    written.push_back("source_" + s.id + ".txt");
  }

  for (const auto& d : set.datasets) {
    std::string body;
    for (const auto& p : d.pairs) body += p.first.str() + "\t" + p.second.str() + "\t" + detail::number(p.gold) + "\n";
    emit(d.name + ".tsv", body);
  }

  std::string corpus;
  for (const auto& unit : set.corpus) {
    for (std::size_t i = 0; i < unit.size(); ++i) corpus += (i ? " " : "") + unit[i].str();
    corpus += "\n";
  }
  emit("corpus.txt", corpus);

  std::string conf = "# Fixture pipeline configuration. Relative paths resolve against this file.\n";
  conf += "seed=" + std::to_string(seed) + "\n";
  conf += "graph.path=graph.tsv\n";
  conf += "graph.min_degree=3\n";
  conf += "graph.max_phrase_words=4\n";
  for (const auto& s : set.sources) {
    conf += "source." + s.id + ".path=source_" + s.id + ".txt\n";
    conf += "source." + s.id + ".lang=" + (s.matrix.empty() ? std::string("en") : s.matrix.vocab()[0].lang) + "\n";
  }
  conf += "vocab.both_threshold=" + std::to_string(set.both_threshold) + "\n";
  conf += "vocab.either_threshold=" + std::to_string(set.either_threshold) + "\n";
  conf += "retrofit.iterations=200\n";
  conf += "retrofit.tolerance=1e-9\n";
  conf += "reduce.dims=8\n";
  conf += "reduce.sample_fraction=0.05\n";
  conf += "output.embeddings=out/m3.txt\n";
  conf += "output.projection=out/projection.txt\n";
  emit("build.conf", conf);
  return written;
}

}  // namespace kgembed::fixtures

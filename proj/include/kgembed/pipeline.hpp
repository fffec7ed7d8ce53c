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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "kgembed/cooc.hpp"
#include "kgembed/embedding.hpp"
#include "kgembed/error.hpp"
#include "kgembed/eval.hpp"
#include "kgembed/fixtures.hpp"
#include "kgembed/fusion.hpp"
#include "kgembed/graph.hpp"
#include "kgembed/oov.hpp"
#include "kgembed/retrofit.hpp"
#include "kgembed/seed.hpp"

namespace kgembed {

struct SourceSpec {
  std::string id;
  std::filesystem::path path;
  /// Language tag for untagged tokens; unset means tokens are "lang:text".
  std::optional<std::string> lang;
  std::optional<std::size_t> max_rows;
};

/// Flat key=value configuration. Relative paths are resolved against the
/// directory of the configuration file.
struct PipelineConfig {
  std::filesystem::path graph_path;
  EdgeLoadOptions graph_load;
  FilterOptions filter;
  std::vector<SourceSpec> sources;
  VocabPolicy vocab;
  RetrofitConfig retrofit;
  Eigen::Index dims = 300;
  double sample_fraction = 0.05;
  std::optional<std::uint64_t> seed;
  OOVConfig oov;
  double scale_lo = 0.0;
  double scale_hi = 4.0;
  std::size_t top_k = 4;
  std::filesystem::path embeddings_out;
  std::filesystem::path projection_out;

  /// Checks everything `build` needs; throws ArgumentError naming the key.
  void validate() const {
    if (graph_path.empty()) throw ArgumentError("config: graph.path is required");
    if (sources.empty()) throw ArgumentError("config: at least one source.<id>.path is required");
    for (const auto& s : sources) {
      if (s.path.empty()) throw ArgumentError("config: source." + s.id + ".path is required");
    }
    if (!seed) throw ArgumentError("config: seed is required");
    if (embeddings_out.empty()) throw ArgumentError("config: output.embeddings is required");
    if (projection_out.empty()) throw ArgumentError("config: output.projection is required");
    if (vocab.either_threshold > vocab.both_threshold) {
      throw ArgumentError("config: vocab.either_threshold exceeds vocab.both_threshold");
    }
    if (dims < 1) throw ArgumentError("config: reduce.dims must be positive");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
      throw ArgumentError("config: reduce.sample_fraction must be in (0, 1]");
    }
    if (retrofit.iterations < 1) throw ArgumentError("config: retrofit.iterations must be positive");
    if (!(scale_lo < scale_hi)) throw ArgumentError("config: eval.scale_lo must be below eval.scale_hi");
  }
};

namespace detail {

inline bool parse_bool(std::string_view v, const std::string& source, std::size_t line) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ParseError(source, line, "expected a boolean, got '" + std::string(v) + "'");
}

template <typename T>
T parse_number(std::string_view v, const std::string& source, std::size_t line) {
  if constexpr (std::is_floating_point_v<T>) {
    auto d = parse_double(v);
    if (!d || !std::isfinite(*d)) throw ParseError(source, line, "expected a number, got '" + std::string(v) + "'");
    return static_cast<T>(*d);
  } else {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      throw ParseError(source, line, "expected an integer, got '" + std::string(v) + "'");
    }
    return out;
  }
}

}  // namespace detail

inline PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                                   const std::string& source_name = "config") {
  PipelineConfig cfg;
  std::map<std::string, std::size_t> source_index;
  const auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : base_dir / p;
  };
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source_name, line_no, "expected key=value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError(source_name, line_no, "duplicate key '" + key + "'");
    const auto num_size = [&] { return detail::parse_number<std::size_t>(value, source_name, line_no); };
    const auto num_real = [&] { return detail::parse_number<double>(value, source_name, line_no); };
    const auto flag = [&] { return detail::parse_bool(value, source_name, line_no); };

    if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(value, source_name, line_no);
    } else if (key == "graph.path") {
      cfg.graph_path = resolve(value);
    } else if (key == "graph.min_degree") {
      cfg.filter.min_degree = num_size();
    } else if (key == "graph.max_phrase_words") {
      cfg.filter.max_phrase_words = num_size();
    } else if (key == "graph.negative_relations") {
      cfg.filter.negative_relations.clear();
      for (auto rel : detail::split(value, ',')) {
        if (!detail::trim(rel).empty()) cfg.filter.negative_relations.emplace(detail::trim(rel));
      }
    } else if (key == "graph.skip_malformed") {
      cfg.graph_load.fail_fast = !flag();
    } else if (key.starts_with("source.")) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos || dot == 7) throw ParseError(source_name, line_no, "expected source.<id>.<field>");
      const std::string id = key.substr(7, dot - 7);
      const std::string field = key.substr(dot + 1);
      auto [it, inserted] = source_index.emplace(id, cfg.sources.size());
      if (inserted) cfg.sources.push_back(SourceSpec{id, {}, std::nullopt, std::nullopt});
      SourceSpec& s = cfg.sources[it->second];
      if (field == "path") {
        s.path = resolve(value);
      } else if (field == "lang") {
        if (!valid_lang(value)) throw ParseError(source_name, line_no, "invalid language code");
        s.lang = std::string(value);
      } else if (field == "max_rows") {
        s.max_rows = num_size();
        if (*s.max_rows == 0) throw ParseError(source_name, line_no, "max_rows must be positive");
      } else {
        throw ParseError(source_name, line_no, "unknown source field '" + field + "'");
      }
    } else if (key == "vocab.both_threshold") {
      cfg.vocab.both_threshold = num_size();
    } else if (key == "vocab.either_threshold") {
      cfg.vocab.either_threshold = num_size();
    } else if (key == "retrofit.iterations") {
      cfg.retrofit.iterations = detail::parse_number<int>(value, source_name, line_no);
    } else if (key == "retrofit.tolerance") {
      cfg.retrofit.convergence_tol = num_real();
    } else if (key == "retrofit.orig_weight") {
      cfg.retrofit.orig_weight = num_real();
    } else if (key == "reduce.dims") {
      cfg.dims = detail::parse_number<Eigen::Index>(value, source_name, line_no);
    } else if (key == "reduce.sample_fraction") {
      cfg.sample_fraction = num_real();
    } else if (key == "oov.neighbor") {
      cfg.oov.enable_neighbor_average = flag();
    } else if (key == "oov.cognate") {
      cfg.oov.enable_english_cognate = flag();
    } else if (key == "oov.prefix") {
      cfg.oov.enable_prefix_fallback = flag();
    } else if (key == "oov.min_prefix_len") {
      cfg.oov.min_prefix_len = num_size();
    } else if (key == "oov.english") {
      cfg.oov.english_lang_code = std::string(value);
    } else if (key == "eval.scale_lo") {
      cfg.scale_lo = num_real();
    } else if (key == "eval.scale_hi") {
      cfg.scale_hi = num_real();
    } else if (key == "eval.top_k") {
      cfg.top_k = num_size();
    } else if (key == "output.embeddings") {
      cfg.embeddings_out = resolve(value);
    } else if (key == "output.projection") {
      cfg.projection_out = resolve(value);
    } else {
      throw ParseError(source_name, line_no, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), path.string());
}

/// Raised by a pipeline stage; the message names the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

class StageRunner {
 public:
  explicit StageRunner(std::ostream& log) : log_(log) {}

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        report(name, start);
      } else {
        auto result = fn();
        report(name, start);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }

  /// Appends a detail line to the current stage's log entry.
  void note(const std::string& message) { pending_ += message; }

 private:
  void report(const std::string& name, std::chrono::steady_clock::time_point start) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_ << "[" << name << "] " << pending_ << (pending_.empty() ? "(" : " (") << std::fixed << std::setprecision(3) << secs << "s)\n";
    log_.unsetf(std::ios::floatfield);
    pending_.clear();
  }

  std::ostream& log_;
  std::string pending_;
};

inline std::string shape(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

inline KnowledgeGraph load_filtered_graph(const PipelineConfig& cfg, StageRunner& stages, bool verbose) {
  const KnowledgeGraph raw = stages.run("load graph", [&] {
    EdgeLoadStats stats;
    auto g = load_edges(cfg.graph_path, cfg.graph_load, &stats);
    stages.note(std::to_string(g.edge_count()) + " edges, " + std::to_string(g.node_count()) + " nodes");
    if (stats.malformed > 0) stages.note(", " + std::to_string(stats.malformed) + " malformed lines skipped");
    if (stats.self_loops > 0) stages.note(", " + std::to_string(stats.self_loops) + " self-loops dropped");
    if (verbose) {
      for (const auto& d : stats.diagnostics) stages.note("\n  " + d);
    }
    return g;
  });
  return stages.run("filter graph", [&] {
    auto g = filter_subgraph(raw, cfg.filter);
    stages.note(std::to_string(g.edge_count()) + " edges, " + std::to_string(g.node_count()) + " nodes");
    return g;
  });
}

}  // namespace detail

/// Runs the full build: graph load and filter, per-source standardize and
/// retrofit, vocabulary selection, concatenation, projection fit and
/// projection. Writes the reduced matrix and the projection operator.
inline int cmd_build(const PipelineConfig& cfg, std::ostream& out, std::ostream& err, bool verbose = false) {
  try {
    detail::StageRunner stages(out);
    stages.run("validate config", [&] { cfg.validate(); });
    const KnowledgeGraph graph = detail::load_filtered_graph(cfg, stages, verbose);

    std::vector<EmbeddingMatrix> raw_sources;
    std::vector<EmbeddingMatrix> retrofitted;
    std::vector<SourceBlock> layout;
    for (const auto& spec : cfg.sources) {
      raw_sources.push_back(stages.run("load source " + spec.id, [&] {
        auto m = load_text_embeddings(spec.path, spec.lang, spec.max_rows);
        stages.note(detail::shape(m.rows(), m.dim()));
        return m;
      }));
      retrofitted.push_back(stages.run("retrofit source " + spec.id, [&] {
        const EmbeddingMatrix standardized = standardize(raw_sources.back());
        RetrofitProblem problem(standardized, graph, cfg.retrofit.orig_weight);
        auto result = problem.solve(cfg.retrofit, problem.original());
        stages.note("standardized " + detail::shape(standardized.rows(), standardized.dim()) + ", expanded " +
                    detail::shape(result.q.rows(), result.q.cols()) + ", " + std::to_string(result.sweeps) +
                    " sweeps");
        return EmbeddingMatrix(problem.expanded().vocab(), std::move(result.q));
      }));
      layout.push_back({spec.id, retrofitted.back().dim()});
    }

    const std::vector<Term> vocab = stages.run("select vocabulary", [&] {
      auto v = select_vocabulary(raw_sources, graph, cfg.vocab);
      stages.note(std::to_string(v.size()) + " terms (" + std::to_string(graph.node_count()) + " from graph)");
      return v;
    });
    raw_sources.clear();

    const EmbeddingMatrix unified = stages.run("unify", [&] {
      auto m = build_unified(retrofitted, vocab);
      stages.note("M1 " + detail::shape(m.rows(), m.dim()));
      return m;
    });
    retrofitted.clear();

    const ProjectionFit fit = stages.run("derive projection", [&] {
      auto f = fit_projection(unified, cfg.dims, cfg.sample_fraction, *cfg.seed, layout);
      stages.note("M2 " + detail::shape(f.sample.rows(), f.sample.cols()) + ", P " +
                  detail::shape(f.op.input_dim(), f.op.output_dim()));
      return f;
    });

    const EmbeddingMatrix reduced = stages.run("project", [&] {
      auto m = project(unified, fit.op);
      stages.note("M3 " + detail::shape(m.rows(), m.dim()));
      return m;
    });

    stages.run("write outputs", [&] {
      detail::ensure_parent(cfg.embeddings_out);
      detail::ensure_parent(cfg.projection_out);
      save_text_embeddings(reduced, cfg.embeddings_out);
      save_projection(fit.op, cfg.projection_out);
      stages.note(cfg.embeddings_out.string() + ", " + cfg.projection_out.string());
    });
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Loads the built matrix and the filtered graph for lookups and evaluation.
struct BuiltModel {
  EmbeddingMatrix embeddings;
  KnowledgeGraph graph;
};

inline BuiltModel load_built_model(const PipelineConfig& cfg, std::ostream& log) {
  if (cfg.graph_path.empty()) throw ArgumentError("config: graph.path is required");
  if (cfg.embeddings_out.empty()) throw ArgumentError("config: output.embeddings is required");
  detail::StageRunner stages(log);
  BuiltModel model;
  model.graph = detail::load_filtered_graph(cfg, stages, false);
  model.embeddings = stages.run("load embeddings", [&] {
    auto m = load_text_embeddings(cfg.embeddings_out);
    stages.note(detail::shape(m.rows(), m.dim()));
    return m;
  });
  return model;
}

inline void write_report_table(std::ostream& os, const std::vector<std::pair<std::string, ScoreReport>>& reports) {
  os << std::left << std::setw(14) << "dataset" << std::right << std::setw(7) << "pairs" << std::setw(6) << "oov"
     << std::setw(10) << "pearson" << std::setw(10) << "spearman" << std::setw(10) << "harmonic" << '\n';
  for (const auto& [name, r] : reports) {
    os << std::left << std::setw(14) << name << std::right << std::setw(7) << r.predictions.size() << std::setw(6)
       << r.oov_pair_count << std::fixed << std::setprecision(3) << std::setw(10) << r.pearson << std::setw(10)
       << r.spearman << std::setw(10) << r.harmonic << (r.undefined ? "  (undefined)" : "") << '\n';
    os.unsetf(std::ios::floatfield);
  }
}

/// Scores each dataset against the built embeddings and prints a table, the
/// key-value report and, with at least top_k datasets, the top-k aggregate.
inline int cmd_eval(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& datasets, std::ostream& out,
                    std::ostream& err, std::optional<std::size_t> top_k = std::nullopt) {
  try {
    if (datasets.empty()) throw ArgumentError("eval needs at least one dataset");
    std::ostringstream log;
    const BuiltModel model = load_built_model(cfg, log);
    const Resolver resolver(model.embeddings, model.graph, cfg.oov);
    std::vector<std::pair<std::string, ScoreReport>> reports;
    for (const auto& path : datasets) {
      const auto d = load_dataset(path, {}, cfg.scale_lo, cfg.scale_hi);
      reports.emplace_back(d.name, score_dataset(d, resolver));
    }
    write_report_table(out, reports);
    std::vector<double> harmonics;
    for (const auto& [name, r] : reports) {
      write_report_kv(out, name, r);
      harmonics.push_back(r.harmonic);
    }
    const std::size_t k = top_k.value_or(cfg.top_k);
    if (harmonics.size() >= k && k > 0) {
      std::string v;
      detail::append_number(v, aggregate(harmonics, k));
      out << "aggregate_top" << k << "=" << v << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Aggregates precomputed per-dataset scores ("label<TAB>score" lines).
inline int cmd_eval_scores(const std::filesystem::path& scores, std::size_t top_k, std::ostream& out,
                           std::ostream& err) {
  try {
    std::ifstream in(scores);
    if (!in) throw IoError("cannot open scores file " + scores.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto fields = detail::split_ws(line);
      if (fields.empty() || fields[0].front() == '#') continue;
      if (fields.size() != 2) throw ParseError(scores.string(), line_no, "expected 'label score'");
      auto v = detail::parse_double(fields[1]);
      if (!v) throw ParseError(scores.string(), line_no, "non-numeric score");
      values.push_back(*v);
      out << fields[0] << '=' << fields[1] << '\n';
    }
    std::string v;
    detail::append_number(v, aggregate(values, top_k));
    out << "aggregate_top" << top_k << "=" << v << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Prints "<term>\t<TAG>\t<values>" or "<term>\tMISS".
inline int cmd_lookup(const PipelineConfig& cfg, const std::string& term, std::ostream& out, std::ostream& err) {
  try {
    const Term t = parse_term(term);
    std::ostringstream log;
    const BuiltModel model = load_built_model(cfg, log);
    const auto r = Resolver(model.embeddings, model.graph, cfg.oov).resolve(t);
    if (!r) {
      out << t.str() << "\tMISS\n";
      return 0;
    }
    std::string line = t.str() + "\t" + std::string(to_string(r->provenance)) + "\t";
    for (Eigen::Index i = 0; i < r->vector.size(); ++i) {
      if (i > 0) line.push_back(' ');
      detail::append_number(line, r->vector(i));
    }
    out << line << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Counts an aligned corpus, factorizes its PPMI matrix and writes the vectors.
inline int cmd_cooc(const std::filesystem::path& corpus, Eigen::Index dims, std::uint64_t seed,
                    const std::filesystem::path& output, std::ostream& out, std::ostream& err,
                    double cds_alpha = 1.0) {
  try {
    detail::StageRunner stages(out);
    const auto units = stages.run("load corpus", [&] {
      auto u = load_aligned_units(corpus);
      stages.note(std::to_string(u.size()) + " aligned units");
      return u;
    });
    const auto counts = stages.run("count", [&] {
      auto c = count_units(units);
      stages.note(std::to_string(c.totals().size()) + " terms, " + std::to_string(c.pairs().size()) + " pairs");
      return c;
    });
    const auto m = stages.run("svd of ppmi", [&] {
      auto e = embed_cooc(counts, dims, derive_seed(seed, "cooc.svd"), cds_alpha);
      stages.note(detail::shape(e.rows(), e.dim()));
      return e;
    });
    stages.run("write output", [&] {
      detail::ensure_parent(output);
      save_text_embeddings(m, output);
      stages.note(output.string());
    });
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Standardizes and retrofits one configured source over the filtered graph.
inline int cmd_retrofit(const PipelineConfig& cfg, const std::string& source_id,
                        const std::filesystem::path& output, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.graph_path.empty()) throw ArgumentError("config: graph.path is required");
    auto it = std::find_if(cfg.sources.begin(), cfg.sources.end(), [&](const auto& s) { return s.id == source_id; });
    if (it == cfg.sources.end()) throw ArgumentError("config: no source named '" + source_id + "'");
    detail::StageRunner stages(out);
    const KnowledgeGraph graph = detail::load_filtered_graph(cfg, stages, false);
    const EmbeddingMatrix result = stages.run("retrofit source " + source_id, [&] {
      auto m = retrofit(standardize(load_text_embeddings(it->path, it->lang, it->max_rows)), graph, cfg.retrofit);
      stages.note(detail::shape(m.rows(), m.dim()));
      return m;
    });
    stages.run("write output", [&] {
      detail::ensure_parent(output);
      save_text_embeddings(result, output);
      stages.note(output.string());
    });
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

/// Applies a saved projection operator to a matrix in the concatenated space.
inline int cmd_project(const std::filesystem::path& projection, const std::filesystem::path& input,
                       const std::filesystem::path& output, std::ostream& out, std::ostream& err) {
  try {
    detail::StageRunner stages(out);
    const auto op = stages.run("load projection", [&] {
      auto p = load_projection(projection);
      stages.note(detail::shape(p.input_dim(), p.output_dim()));
      return p;
    });
    const auto m = stages.run("project", [&] {
      auto r = project(load_text_embeddings(input), op);
      stages.note(detail::shape(r.rows(), r.dim()));
      return r;
    });
    stages.run("write output", [&] {
      detail::ensure_parent(output);
      save_text_embeddings(m, output);
      stages.note(output.string());
    });
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_fixtures(const std::filesystem::path& dir, std::uint64_t seed, std::ostream& out,
                        std::ostream& err) {
  try {
    fixtures::FixtureSpec spec = fixtures::default_spec();
    spec.seed = seed;
    for (const auto& name : fixtures::write_fixtures(fixtures::generate(spec), dir, seed)) {
      out << (dir / name).string() << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kgembed

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


// Command-line front end for the kgembed pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgembed/pipeline.hpp"

namespace {

kgembed::PipelineConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  auto cfg = kgembed::load_config(path);
  if (seed) cfg.seed = seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual term embeddings from knowledge-graph retrofitting"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("--config", config_path, "Pipeline configuration (key=value)");
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_flag("--verbose", verbose, "Print extra diagnostics");

  auto* build = app.add_subcommand("build", "Build the reduced embedding matrix and projection");

  auto* eval = app.add_subcommand("eval", "Score word-similarity datasets");
  std::vector<std::string> datasets;
  std::string scores_path;
  std::optional<std::size_t> top_k;
  eval->add_option("datasets", datasets, "Dataset TSV files");
  eval->add_option("--scores", scores_path, "Aggregate precomputed 'label score' lines instead");
  eval->add_option("--top-k", top_k, "Number of best scores to average");

  auto* lookup = app.add_subcommand("lookup", "Resolve a term through the fallback chain");
  std::string term;
  lookup->add_option("term", term, "Term as lang:text")->required();

  auto* cooc = app.add_subcommand("cooc", "Embeddings from an aligned corpus via SVD of PPMI");
  std::string corpus_path;
  std::string cooc_out;
  Eigen::Index cooc_dims = 300;
  double cds_alpha = 1.0;
  cooc->add_option("--corpus", corpus_path, "Aligned units, one per line")->required();
  cooc->add_option("--dims", cooc_dims, "Output dimensionality");
  cooc->add_option("--out", cooc_out, "Output embedding file")->required();
  cooc->add_option("--cds", cds_alpha, "Context distribution smoothing exponent in (0, 1]");

  auto* retro = app.add_subcommand("retrofit", "Standardize and retrofit one configured source");
  std::string source_id;
  std::string retro_out;
  retro->add_option("--source", source_id, "Source id from the config")->required();
  retro->add_option("--out", retro_out, "Output embedding file")->required();

  auto* proj = app.add_subcommand("project", "Apply a saved projection operator");
  std::string projection_path;
  std::string input_path;
  std::string project_out;
  proj->add_option("--projection", projection_path, "Projection operator file")->required();
  proj->add_option("--input", input_path, "Embedding file in the concatenated space")->required();
  proj->add_option("--out", project_out, "Output embedding file")->required();

  auto* fix = app.add_subcommand("fixtures", "Write the synthetic test fixtures");
  std::string fixture_dir;
  fix->add_option("--out", fixture_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  const auto need_config = [&]() -> std::optional<kgembed::PipelineConfig> {
    if (config_path.empty()) {
      std::cerr << "error: --config is required for this subcommand\n";
      return std::nullopt;
    }
    try {
      return load(config_path, seed);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return std::nullopt;
    }
  };

  if (*build) {
    auto cfg = need_config();
    return cfg ? kgembed::cmd_build(*cfg, std::cout, std::cerr, verbose) : 2;
  }
  if (*eval) {
    if (!scores_path.empty()) return kgembed::cmd_eval_scores(scores_path, top_k.value_or(4), std::cout, std::cerr);
    auto cfg = need_config();
    if (!cfg) return 2;
    std::vector<std::filesystem::path> paths(datasets.begin(), datasets.end());
    return kgembed::cmd_eval(*cfg, paths, std::cout, std::cerr, top_k);
  }
  if (*lookup) {
    auto cfg = need_config();
    return cfg ? kgembed::cmd_lookup(*cfg, term, std::cout, std::cerr) : 2;
  }
  if (*cooc) {
    return kgembed::cmd_cooc(corpus_path, cooc_dims, seed.value_or(0), cooc_out, std::cout, std::cerr, cds_alpha);
  }
  if (*retro) {
    auto cfg = need_config();
    return cfg ? kgembed::cmd_retrofit(*cfg, source_id, retro_out, std::cout, std::cerr) : 2;
  }
  if (*proj) return kgembed::cmd_project(projection_path, input_path, project_out, std::cout, std::cerr);
  if (*fix) return kgembed::cmd_fixtures(fixture_dir, seed.value_or(20170803), std::cout, std::cerr);
  return 2;
}

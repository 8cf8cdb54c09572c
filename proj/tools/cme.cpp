//
// Copyright (C) 2026 The CME Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cme/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Compositional multiview embeddings for account-type classification"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "pipeline config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the run seed");
    sub->add_option("--out", out, "base directory for run outputs");
    return sub;
  };
  add("synth", "generate a synthetic labeled corpus");
  add("preprocess", "extract entities and clean tokens");
  add("train-we", "train the content and people word embeddings");
  add("views", "build per-user view embeddings");
  add("netembed", "embed the interaction network");
  add("correlate", "Spearman correlation between view pairs");
  add("compose", "compose view embeddings by vector addition");
  add("classify", "cross-validated classification of both experiment suites");
  add("report", "summarize both suites against their baselines");
  add("all", "run every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = cme::pipeline::PipelineConfig::load(
        config, seed, out ? std::optional<std::filesystem::path>(*out) : std::nullopt);
    const std::string name = app.get_subcommands().front()->get_name();
    std::cerr << "[cme] run directory " << cfg.run_dir().string() << '\n';
    if (name == "all") {
      for (const auto& stage : cme::pipeline::command_names()) {
        if (stage == "synth" && cfg.corpus_dir) continue;
        cme::pipeline::run_command(stage, cfg);
      }
    } else {
      cme::pipeline::run_command(name, cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "cme: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

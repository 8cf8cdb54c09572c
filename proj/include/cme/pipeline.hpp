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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cme/classify.hpp"
#include "cme/common.hpp"
#include "cme/compose.hpp"
#include "cme/emoji.hpp"
#include "cme/imagetags.hpp"
#include "cme/net.hpp"
#include "cme/synth.hpp"
#include "cme/text.hpp"
#include "cme/we.hpp"

// Stage orchestration behind the `cme` command. Every stage reads its inputs
// from the run directory and writes its own subdirectory there.

namespace cme::pipeline {

/// An upstream stage has not produced the artifact a command needs.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::filesystem::path& artifact, const std::string& command)
      : Error("missing " + artifact.string() + "; run `cme " + command + "` first"),
        command_(command) {}
  const std::string& command() const { return command_; }

 private:
  std::string command_;
};

struct PipelineConfig {
  std::string source_text;  // config file bytes, part of the run address
  std::uint64_t seed = 1;
  std::filesystem::path out_base = "runs";

  // [data]
  std::optional<std::filesystem::path> corpus_dir;  // unset: the synth stage output
  std::filesystem::path stopwords;
  std::filesystem::path lemmas;
  std::filesystem::path name_lexicon;
  std::filesystem::path emoji_lexicon;
  std::optional<std::filesystem::path> image_fixture;  // unset: the synth stage output

  synth::SynthConfig synth;
  text::HashtagPolicy hashtags = text::HashtagPolicy::KeepBody;
  we::TrainingConfig content_we;
  we::TrainingConfig people_we;

  emoji::Repetition emoji_repetition = emoji::Repetition::Multiset;
  imagetags::ClientConfig images;
  double image_confidence_threshold = 0.5;

  net::ChainOptions network;

  std::vector<std::pair<compose::ViewName, compose::ViewName>> correlation_pairs;
  compose::Pairing pairing = compose::Pairing::Flatten;
  double alpha = 0.01;

  std::string baseline = "Tweet+Description";
  std::vector<std::string> suite_a;
  std::vector<std::string> suite_b;

  classify::Hyperparams classifier;
  std::size_t folds = 5;
  bool use_smote = true;
  std::size_t smote_k = 5;

  /// Reads a sectioned key=value file. Relative paths resolve against the
  /// file's directory.
  static PipelineConfig load(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             std::optional<std::filesystem::path> out_override = std::nullopt);

  /// Content-addressed: a hash of the config bytes and the seed.
  std::filesystem::path run_dir() const;

  /// Per-stage seeds, all derived from `seed`.
  std::uint64_t stage_seed(std::string_view stage) const;
};

void cmd_synth(const PipelineConfig& cfg);
void cmd_preprocess(const PipelineConfig& cfg);
void cmd_train_we(const PipelineConfig& cfg);
void cmd_views(const PipelineConfig& cfg);
void cmd_netembed(const PipelineConfig& cfg);
void cmd_correlate(const PipelineConfig& cfg);
void cmd_compose(const PipelineConfig& cfg);
void cmd_classify(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg);

/// Stage names in execution order, as accepted by `run_command`.
const std::vector<std::string>& command_names();
void run_command(std::string_view name, const PipelineConfig& cfg);

/// Path of the final human-readable report inside a run directory.
std::filesystem::path report_path(const PipelineConfig& cfg);

}  // namespace cme::pipeline

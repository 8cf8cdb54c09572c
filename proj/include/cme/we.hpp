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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cme/common.hpp"
#include "cme/text.hpp"

namespace cme::we {

struct TrainingConfig {
  std::size_t dimension = 300;
  std::size_t window = 5;
  std::size_t negatives = 10;
  std::size_t epochs = 5;
  double learning_rate = 0.025;  // decays linearly to learning_rate * 1e-4
  std::size_t min_count = 5;
  double subsample_threshold = 1e-4;  // 0 disables subsampling
  std::uint64_t seed = 1;
  /// >1 enables lock-free parallel updates; results are then not reproducible.
  std::size_t threads = 1;

  void validate() const;
};

/// Word vectors plus the vocabulary they index. Immutable once built.
class WEModel {
 public:
  WEModel() = default;
  WEModel(std::vector<std::string> words, std::vector<double> vectors, std::size_t dimension,
          TrainingConfig config = {});

  std::size_t size() const { return words_.size(); }
  std::size_t dimension() const { return dim_; }
  const TrainingConfig& config() const { return config_; }
  const std::vector<std::string>& words() const { return words_; }

  std::optional<std::size_t> index_of(const std::string& word) const;
  std::span<const double> row(std::size_t index) const {
    return {vectors_.data() + index * dim_, dim_};
  }
  std::optional<Vector> vector(const std::string& word) const;

  bool operator==(const WEModel& o) const {
    return dim_ == o.dim_ && words_ == o.words_ && vectors_ == o.vectors_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> vectors_;
  std::size_t dim_ = 0;
  TrainingConfig config_;
};

/// Skip-gram with negative sampling. Throws TrainingError when no word
/// survives min_count.
WEModel train_skipgram(const std::vector<text::TokenSet>& sentences, const TrainingConfig& config);

/// Mean of the vectors of the in-vocabulary tokens, counted with multiplicity.
/// Returns the empty-view sentinel when no token is in the vocabulary.
ViewValue view_embedding(const text::TokenSet& tokens, const WEModel& model);

/// Text layout: "<vocab_size> <dim>" then "word v1 ... vd" per line.
void save_text(const WEModel& model, const std::filesystem::path& path);
WEModel load_text(const std::filesystem::path& path);

}  // namespace cme::we

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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cme/common.hpp"
#include "cme/numeric.hpp"
#include "json.hpp"

namespace cme::classify {

using numeric::Matrix;
using Labels = std::vector<ClassLabel>;

struct FeatureMatrix {
  Matrix rows;
  std::vector<UserId> ids;
};

// --- SMOTE ------------------------------------------------------------------

struct SMOTEConfig {
  std::size_t k_neighbors = 5;
  /// Per-class target counts; unset entries default to the majority count.
  std::array<std::optional<std::size_t>, kNumClasses> target{};
  std::uint64_t seed = 1;
  /// Replicate the single sample of a one-sample class instead of failing.
  bool allow_duplication = false;
};

struct Resampled {
  Matrix features;
  Labels labels;
  std::size_t original_rows = 0;  // rows [0, original_rows) are the inputs, unchanged
};

/// Appends x_i + u * (x_nn - x_i) samples, u ~ U[0,1], x_nn one of the k
/// nearest same-class neighbours of a random same-class x_i, until every class
/// reaches its target. Classes already at or above target are left alone.
Resampled smote(const Matrix& features, const Labels& labels, const SMOTEConfig& config);

// --- Classifier -------------------------------------------------------------

enum class Family { MultinomialLogistic, LinearMargin };

std::string_view family_name(Family f);
Family parse_family(std::string_view s);

struct Hyperparams {
  Family family = Family::MultinomialLogistic;
  double l2 = 1e-3;
  std::size_t max_epochs = 300;
  double initial_step = 1.0;
  double gradient_tolerance = 1e-6;
  bool standardize = true;
  std::uint64_t seed = 1;
};

struct ClassifierModel {
  Family family = Family::MultinomialLogistic;
  Matrix weights;  // kNumClasses x (d + 1), bias in the last column
  Vector mean;     // per-feature centring (empty: none)
  Vector scale;    // per-feature scaling (empty: none)
  std::vector<double> loss_history;
  std::size_t epochs = 0;

  std::size_t dimension() const { return weights.cols() ? weights.cols() - 1 : 0; }
  nlohmann::json to_json() const;
};

struct LossGradient {
  double loss = 0.0;
  Matrix gradient;  // same shape as weights
};

/// Mean softmax cross-entropy plus (l2/2)*||W||^2 over non-bias weights.
LossGradient logistic_loss(const Matrix& weights, const Matrix& x, const Labels& y, double l2);
/// One-vs-rest mean squared hinge plus the same penalty.
LossGradient margin_loss(const Matrix& weights, const Matrix& x, const Labels& y, double l2);

/// Full-batch gradient descent with backtracking, so the training loss never
/// increases between epochs. Throws ArgumentError unless >= 2 classes appear.
ClassifierModel train_classifier(const Matrix& features, const Labels& labels,
                                 const Hyperparams& hp);

/// Argmax of class scores, ties going to the earlier class.
Labels predict(const ClassifierModel& model, const Matrix& features);
Matrix class_scores(const ClassifierModel& model, const Matrix& features);

// --- Evaluation -------------------------------------------------------------

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool no_support = false;      // no gold samples of this class
  bool never_predicted = false;  // precision undefined, reported as 0
};

struct EvaluationReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
  double accuracy = 0.0;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
  std::size_t total = 0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Macro averages run over classes present in gold or predictions.
EvaluationReport evaluate(const Labels& predicted, const Labels& gold);

struct Comparison {
  std::string baseline;
  double macro_f1_delta = 0.0;
  double relative_improvement = 0.0;  // delta / baseline macro-F1
  double accuracy_delta = 0.0;
};
Comparison compare(const EvaluationReport& run, const EvaluationReport& baseline,
                   std::string baseline_name);

// --- Splitting --------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled holdout with round(ratio * n_c) training rows per class.
Split stratified_split(const Labels& labels, double train_ratio, std::uint64_t seed);
/// k stratified folds; every present class needs at least k samples.
std::vector<Split> stratified_folds(const Labels& labels, std::size_t folds, std::uint64_t seed);

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows);
Labels take(const Labels& l, std::span<const std::size_t> rows);

struct CrossValidation {
  EvaluationReport report;  // pooled over folds
  Labels predicted;         // out-of-fold prediction per input row
};

/// SMOTE (when enabled) is fitted on training folds only.
CrossValidation cross_validate(const Matrix& features, const Labels& labels, std::size_t folds,
                               const std::optional<SMOTEConfig>& smote_config,
                               const Hyperparams& hp, std::uint64_t seed);

}  // namespace cme::classify

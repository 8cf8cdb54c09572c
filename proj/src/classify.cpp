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

#include "cme/classify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "cme/util.hpp"

namespace cme::classify {

using nlohmann::json;

// --- SMOTE ------------------------------------------------------------------

Resampled smote(const Matrix& features, const Labels& labels, const SMOTEConfig& config) {
  if (features.rows() != labels.size())
    throw ArgumentError("smote: feature rows and labels differ in length");
  if (config.k_neighbors < 1) throw ArgumentError("smote: k_neighbors must be >= 1");

  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[class_index(labels[i])].push_back(i);
  std::size_t majority = 0;
  for (const auto& m : members) majority = std::max(majority, m.size());

  std::array<std::size_t, kNumClasses> need{};
  std::size_t extra = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t n = members[c].size();
    const std::size_t target = config.target[c].value_or(majority);
    if (n == 0 || n >= target) continue;
    if (n == 1 && !config.allow_duplication)
      throw ArgumentError("smote: class " + std::string(class_name(class_from_index(c))) +
                          " has a single sample; enable allow_duplication to replicate it");
    need[c] = target - n;
    extra += need[c];
  }

  const std::size_t d = features.cols();
  Resampled out;
  out.original_rows = features.rows();
  out.features = Matrix(features.rows() + extra, d);
  std::copy(features.data().begin(), features.data().end(), out.features.data().begin());
  out.labels = labels;
  out.labels.reserve(labels.size() + extra);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t next = features.rows();

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (need[c] == 0) continue;
    const auto& idx = members[c];
    const std::size_t n = idx.size();
    const std::size_t k = std::min(config.k_neighbors, n - 1);

    // k nearest same-class neighbours by Euclidean distance, ties by index.
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t a = 0; a < n && k > 0; ++a) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(n - 1);
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a) continue;
        double s = 0.0;
        auto ra = features.row(idx[a]);
        auto rb = features.row(idx[b]);
        for (std::size_t j = 0; j < d; ++j) s += (ra[j] - rb[j]) * (ra[j] - rb[j]);
        dist.emplace_back(s, b);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t t = 0; t < k; ++t) neighbours[a].push_back(dist[t].second);
    }

    for (std::size_t s = 0; s < need[c]; ++s) {
      const std::size_t a = rng() % n;
      auto dst = out.features.row(next++);
      auto base = features.row(idx[a]);
      if (k == 0) {
        std::copy(base.begin(), base.end(), dst.begin());
      } else {
        const std::size_t b = neighbours[a][rng() % k];
        auto nn = features.row(idx[b]);
        const double u = unit(rng);
        for (std::size_t j = 0; j < d; ++j) dst[j] = base[j] + u * (nn[j] - base[j]);
      }
      out.labels.push_back(class_from_index(c));
    }
  }
  return out;
}

// --- Classifier -------------------------------------------------------------

std::string_view family_name(Family f) {
  return f == Family::MultinomialLogistic ? "multinomial-logistic" : "linear-margin";
}

Family parse_family(std::string_view s) {
  if (s == "multinomial-logistic" || s == "logistic") return Family::MultinomialLogistic;
  if (s == "linear-margin" || s == "margin") return Family::LinearMargin;
  throw ConfigError("unknown classifier family '" + std::string(s) + "'");
}

namespace {

void check_shapes(const Matrix& w, const Matrix& x, const Labels& y) {
  if (w.rows() != kNumClasses || w.cols() != x.cols() + 1)
    throw ArgumentError("weights must be " + std::to_string(kNumClasses) + " x (d+1)");
  if (x.rows() != y.size()) throw ArgumentError("feature rows and labels differ in length");
  if (x.rows() == 0) throw ArgumentError("no training rows");
}

Matrix raw_scores(const Matrix& w, const Matrix& x) {
  const std::size_t d = x.cols();
  Matrix s(x.rows(), kNumClasses);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      auto wc = w.row(c);
      double v = wc[d];
      for (std::size_t k = 0; k < d; ++k) v += wc[k] * xi[k];
      s(i, c) = v;
    }
  }
  return s;
}

// Adds the data term gradient given d(loss)/d(score), and the L2 penalty.
void finish_gradient(LossGradient& lg, const Matrix& w, const Matrix& x, const Matrix& dscore,
                     double l2) {
  const std::size_t d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  lg.gradient = Matrix(w.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double g = dscore(i, c) * inv_n;
      if (g == 0.0) continue;
      auto gc = lg.gradient.row(c);
      for (std::size_t k = 0; k < d; ++k) gc[k] += g * xi[k];
      gc[d] += g;
    }
  }
  double penalty = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (std::size_t k = 0; k < d; ++k) {
      penalty += w(c, k) * w(c, k);
      lg.gradient(c, k) += l2 * w(c, k);
    }
  lg.loss = lg.loss * inv_n + 0.5 * l2 * penalty;
}

Matrix apply_standardization(const ClassifierModel& m, const Matrix& x) {
  if (m.mean.empty()) return x;
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = (r[k] - m.mean[k]) * m.scale[k];
  }
  return out;
}

}  // namespace

LossGradient logistic_loss(const Matrix& w, const Matrix& x, const Labels& y, double l2) {
  check_shapes(w, x, y);
  const Matrix s = raw_scores(w, x);
  Matrix dscore(x.rows(), kNumClasses);
  LossGradient lg;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = s(i, 0);
    for (std::size_t c = 1; c < kNumClasses; ++c) mx = std::max(mx, s(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) z += std::exp(s(i, c) - mx);
    const double lse = mx + std::log(z);
    const std::size_t yi = class_index(y[i]);
    lg.loss += lse - s(i, yi);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      dscore(i, c) = std::exp(s(i, c) - lse) - (c == yi ? 1.0 : 0.0);
  }
  finish_gradient(lg, w, x, dscore, l2);
  return lg;
}

LossGradient margin_loss(const Matrix& w, const Matrix& x, const Labels& y, double l2) {
  check_shapes(w, x, y);
  const Matrix s = raw_scores(w, x);
  Matrix dscore(x.rows(), kNumClasses);
  LossGradient lg;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::size_t yi = class_index(y[i]);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double sign = c == yi ? 1.0 : -1.0;
      const double slack = std::max(0.0, 1.0 - sign * s(i, c));
      lg.loss += slack * slack;
      dscore(i, c) = -2.0 * slack * sign;
    }
  }
  finish_gradient(lg, w, x, dscore, l2);
  return lg;
}

ClassifierModel train_classifier(const Matrix& features, const Labels& labels,
                                 const Hyperparams& hp) {
  if (features.rows() != labels.size())
    throw ArgumentError("train_classifier: feature rows and labels differ in length");
  std::array<std::size_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[class_index(l)];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw ArgumentError("train_classifier: need at least two classes in the training data");

  ClassifierModel model;
  model.family = hp.family;
  const std::size_t d = features.cols();
  if (hp.standardize) {
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 1.0);
    const double n = static_cast<double>(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i)
      for (std::size_t k = 0; k < d; ++k) model.mean[k] += features(i, k);
    for (auto& m : model.mean) m /= n;
    Vector var(d, 0.0);
    for (std::size_t i = 0; i < features.rows(); ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const double z = features(i, k) - model.mean[k];
        var[k] += z * z;
      }
    for (std::size_t k = 0; k < d; ++k) {
      const double sd = std::sqrt(var[k] / n);
      model.scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
  }
  const Matrix x = apply_standardization(model, features);

  auto objective = [&](const Matrix& w) {
    return hp.family == Family::MultinomialLogistic ? logistic_loss(w, x, labels, hp.l2)
                                                    : margin_loss(w, x, labels, hp.l2);
  };

  Matrix w(kNumClasses, d + 1);
  LossGradient cur = objective(w);
  model.loss_history.push_back(cur.loss);
  double step = hp.initial_step;
  std::size_t epoch = 0;
  for (; epoch < hp.max_epochs; ++epoch) {
    double g2 = 0.0;
    for (double g : cur.gradient.data()) g2 += g * g;
    if (std::sqrt(g2) <= hp.gradient_tolerance) break;

    bool accepted = false;
    Matrix trial_w(w.rows(), w.cols());
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t i = 0; i < w.data().size(); ++i)
        trial_w.data()[i] = w.data()[i] - step * cur.gradient.data()[i];
      LossGradient trial = objective(trial_w);
      if (trial.loss <= cur.loss - 0.5 * step * g2) {
        const double decrease = cur.loss - trial.loss;
        w = trial_w;
        cur = std::move(trial);
        accepted = true;
        model.loss_history.push_back(cur.loss);
        if (decrease <= 1e-12 * std::max(1.0, std::fabs(cur.loss))) epoch = hp.max_epochs;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step *= 2.0;
  }
  model.epochs = std::min(epoch, hp.max_epochs);
  model.weights = std::move(w);
  for (double v : model.weights.data())
    if (!std::isfinite(v)) throw TrainingError("classifier weights diverged");
  return model;
}

Matrix class_scores(const ClassifierModel& model, const Matrix& features) {
  if (features.cols() != model.dimension())
    throw ArgumentError("predict: feature dimension " + std::to_string(features.cols()) +
                        " does not match model dimension " + std::to_string(model.dimension()));
  return raw_scores(model.weights, apply_standardization(model, features));
}

Labels predict(const ClassifierModel& model, const Matrix& features) {
  const Matrix s = class_scores(model, features);
  Labels out(features.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c)
      if (s(i, c) > s(i, best)) best = c;
    out[i] = class_from_index(best);
  }
  return out;
}

json ClassifierModel::to_json() const {
  json j;
  j["family"] = family_name(family);
  j["epochs"] = epochs;
  j["final_loss"] = loss_history.empty() ? 0.0 : loss_history.back();
  j["dimension"] = dimension();
  return j;
}

// --- Evaluation -------------------------------------------------------------

EvaluationReport evaluate(const Labels& predicted, const Labels& gold) {
  if (predicted.size() != gold.size())
    throw ArgumentError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(gold.size()) + " gold labels");
  EvaluationReport r;
  r.total = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i)
    ++r.confusion[class_index(gold[i])][class_index(predicted[i])];

  std::size_t tp_total = 0, active = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = r.per_class[c];
    const std::size_t tp = r.confusion[c][c];
    std::size_t pred = 0;
    for (std::size_t g = 0; g < kNumClasses; ++g) pred += r.confusion[g][c];
    for (std::size_t p = 0; p < kNumClasses; ++p) m.support += r.confusion[c][p];
    m.no_support = m.support == 0;
    m.never_predicted = pred == 0;
    m.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    tp_total += tp;
    if (m.support || pred) {
      ++active;
      r.macro_precision += m.precision;
      r.macro_recall += m.recall;
      r.macro_f1 += m.f1;
    }
  }
  if (active) {
    r.macro_precision /= static_cast<double>(active);
    r.macro_recall /= static_cast<double>(active);
    r.macro_f1 /= static_cast<double>(active);
  }
  if (r.total) {
    r.accuracy = static_cast<double>(tp_total) / static_cast<double>(r.total);
    r.micro_precision = r.micro_recall = r.micro_f1 = r.accuracy;
  }
  return r;
}

json EvaluationReport::to_json() const {
  json j;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = per_class[c];
    j["per_class"][std::string(class_name(class_from_index(c)))] = {
        {"precision", m.precision}, {"recall", m.recall},
        {"f1", m.f1},               {"support", m.support},
        {"no_support", m.no_support}, {"never_predicted", m.never_predicted}};
  }
  j["macro"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
  j["micro"] = {{"precision", micro_precision}, {"recall", micro_recall}, {"f1", micro_f1}};
  j["accuracy"] = accuracy;
  j["total"] = total;
  j["confusion"] = confusion;
  return j;
}

std::string EvaluationReport::to_table() const {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4);
  ss << "class            precision  recall     f1         support\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = per_class[c];
    ss << std::left << std::setw(17) << class_name(class_from_index(c)) << std::setw(11)
       << m.precision << std::setw(11) << m.recall << std::setw(11) << m.f1 << m.support;
    if (m.no_support) ss << "  (no support)";
    if (m.never_predicted) ss << "  (never predicted)";
    ss << '\n';
  }
  ss << std::left << std::setw(17) << "macro" << std::setw(11) << macro_precision << std::setw(11)
     << macro_recall << std::setw(11) << macro_f1 << total << '\n';
  ss << "accuracy " << accuracy << "\n";
  ss << "confusion (rows gold P/I/R, cols predicted P/I/R)\n";
  for (const auto& row : confusion) ss << "  " << row[0] << ' ' << row[1] << ' ' << row[2] << '\n';
  return ss.str();
}

Comparison compare(const EvaluationReport& run, const EvaluationReport& baseline,
                   std::string baseline_name) {
  Comparison c;
  c.baseline = std::move(baseline_name);
  c.macro_f1_delta = run.macro_f1 - baseline.macro_f1;
  c.relative_improvement = baseline.macro_f1 > 0.0 ? c.macro_f1_delta / baseline.macro_f1 : 0.0;
  c.accuracy_delta = run.accuracy - baseline.accuracy;
  return c;
}

// --- Splitting --------------------------------------------------------------

namespace {

std::array<std::vector<std::size_t>, kNumClasses> shuffled_members(const Labels& labels,
                                                                   std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[class_index(labels[i])].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& m : members) std::shuffle(m.begin(), m.end(), rng);
  return members;
}

}  // namespace

Split stratified_split(const Labels& labels, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ArgumentError("train ratio must lie strictly between 0 and 1");
  auto members = shuffled_members(labels, seed);
  Split out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    if (m.size() < 2)
      throw ArgumentError("class " + std::string(class_name(class_from_index(c))) +
                          " has fewer than 2 samples; cannot split");
    auto n_train = static_cast<std::size_t>(std::lround(train_ratio * static_cast<double>(m.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, m.size() - 1);
    out.train.insert(out.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train), m.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<Split> stratified_folds(const Labels& labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  auto members = shuffled_members(labels, seed);
  std::vector<std::vector<std::size_t>> fold_rows(folds);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    if (m.size() < folds)
      throw ArgumentError("class " + std::string(class_name(class_from_index(c))) + " has " +
                          std::to_string(m.size()) + " samples, fewer than " +
                          std::to_string(folds) + " folds");
    for (std::size_t j = 0; j < m.size(); ++j) fold_rows[(offset + j) % folds].push_back(m[j]);
    offset += m.size();
  }
  std::vector<Split> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].test = fold_rows[f];
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f) out[f].train.insert(out[f].train.end(), fold_rows[g].begin(), fold_rows[g].end());
    std::sort(out[f].train.begin(), out[f].train.end());
    std::sort(out[f].test.begin(), out[f].test.end());
  }
  return out;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Labels take(const Labels& l, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(l.at(r));
  return out;
}

CrossValidation cross_validate(const Matrix& features, const Labels& labels, std::size_t folds,
                               const std::optional<SMOTEConfig>& smote_config,
                               const Hyperparams& hp, std::uint64_t seed) {
  CrossValidation cv;
  cv.predicted.assign(labels.size(), ClassLabel::Personal);
  const auto splits = stratified_folds(labels, folds, seed);
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto& sp = splits[f];
    Matrix xtr = take_rows(features, sp.train);
    Labels ytr = take(labels, sp.train);
    if (smote_config) {
      SMOTEConfig sc = *smote_config;
      sc.seed = smote_config->seed + 1000003ULL * (f + 1);
      auto rs = smote(xtr, ytr, sc);
      xtr = std::move(rs.features);
      ytr = std::move(rs.labels);
    }
    const auto model = train_classifier(xtr, ytr, hp);
    const auto pred = predict(model, take_rows(features, sp.test));
    for (std::size_t i = 0; i < sp.test.size(); ++i) cv.predicted[sp.test[i]] = pred[i];
  }
  cv.report = evaluate(cv.predicted, labels);
  return cv;
}

}  // namespace cme::classify

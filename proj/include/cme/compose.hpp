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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cme/common.hpp"

namespace cme::compose {

enum class ViewName : std::uint8_t {
  Tweet,
  Description,
  TweetEmoji,
  DescriptionEmoji,
  ProfileImage,
  Network,
};

inline constexpr std::array<ViewName, 6> kAllViews{
    ViewName::Tweet,        ViewName::Description, ViewName::TweetEmoji,
    ViewName::DescriptionEmoji, ViewName::ProfileImage, ViewName::Network};

std::string_view view_name(ViewName v);
ViewName parse_view(std::string_view s);

/// Per-user vectors for one view. Users mapped to std::nullopt carry the
/// empty-view sentinel.
class ViewEmbeddingSet {
 public:
  ViewEmbeddingSet(std::string name, std::size_t dimension) : name_(std::move(name)), dim_(dimension) {}

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dim_; }

  void set(const UserId& user, ViewValue value);
  /// nullptr when the user is absent; a disengaged optional for the sentinel.
  const ViewValue* find(const UserId& user) const;
  const std::map<UserId, ViewValue>& entries() const { return values_; }
  std::size_t sentinel_count() const;

  /// Text embedding layout; sentinel users are written to a companion
  /// `<path>.empty` list so they survive a round trip.
  void save(const std::filesystem::path& path) const;
  static ViewEmbeddingSet load(const std::filesystem::path& path, std::string name);

 private:
  std::string name_;
  std::size_t dim_;
  std::map<UserId, ViewValue> values_;
};

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::string decision;
};

/// Spearman rank correlation with average ranks for ties; two-sided p-value
/// from t = rho * sqrt((n-2)/(1-rho^2)) against Student's t with n-2 dof.
/// Throws ArgumentError for n < 3 or a constant input.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           double alpha = 0.01);

/// Average (fractional) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> x);

enum class Pairing {
  Flatten,      // one test over shared users x dimensions
  PerUserMean,  // mean of per-user rho; p from the flattened test
};

CorrelationResult correlate_views(const ViewEmbeddingSet& a, const ViewEmbeddingSet& b,
                                  Pairing pairing = Pairing::Flatten, double alpha = 0.01);

enum class CompositionTag { TE, DE, NTE, Custom };

std::string_view tag_name(CompositionTag t);

struct CMEVector {
  CompositionTag tag = CompositionTag::Custom;
  ViewValue vector;  // sentinel only when every constituent was a sentinel
};

/// Component-wise sum with sentinels contributing zero. Each component is
/// the correctly rounded sum of its terms, so the result is independent of
/// constituent order.
CMEVector compose_add(std::span<const ViewValue> vectors,
                      CompositionTag tag = CompositionTag::Custom);

/// Constituent views for a tag: T+E, D+E, N+T+E; Custom parses "A+B+..."
/// using view names.
std::vector<ViewName> constituents(CompositionTag tag, std::string_view custom_spec = {});
/// Parses "T+E", "D+E", "N+T+E" or a '+'-joined list of view names.
std::pair<CompositionTag, std::vector<ViewName>> parse_composition(std::string_view spec);

struct CompositionReport {
  std::size_t users = 0;
  /// Per constituent view: users whose value was a sentinel or missing.
  std::map<std::string, std::size_t> zero_filled;
  std::size_t all_sentinel = 0;
};

/// Per-user compose_add over the constituent views, for every user present in
/// any constituent. Throws ConfigError when a constituent view is missing.
ViewEmbeddingSet build_cme(const std::map<ViewName, ViewEmbeddingSet>& views,
                           const std::vector<ViewName>& parts, const std::string& name,
                           CompositionReport* report = nullptr);

}  // namespace cme::compose

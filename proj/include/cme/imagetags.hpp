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
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cme/common.hpp"
#include "cme/we.hpp"

// Profile-picture tagging. Live mode talks to a Clarifai-style HTTP endpoint;
// fixture mode answers from a local table and never touches the network.

namespace cme::imagetags {

struct ImageTagResult {
  std::string image_ref;
  std::vector<std::string> tags;
  std::optional<std::vector<double>> confidences;  // aligned with tags

  bool operator==(const ImageTagResult&) const = default;
};

enum class Mode { Fixture, Live };

struct ClientConfig {
  Mode mode = Mode::Fixture;
  std::filesystem::path fixture_path;

  /// e.g. "https://api.clarifai.com/v2/models/general-image-recognition/outputs"
  std::string endpoint;
  std::string credential_env = "CME_IMAGE_TAGGER_KEY";
  int retries = 3;  // attempts = retries + 1
  int retry_backoff_ms = 200;
  int timeout_seconds = 10;
  std::size_t max_concurrency = 4;
  /// Successful live responses are cached here, keyed by image_ref.
  std::optional<std::filesystem::path> cache_dir;
};

/// `image_ref TAB tag,tag,... [TAB conf,conf,...]`
class FixtureTable {
 public:
  static FixtureTable load(const std::filesystem::path& path);
  void add(ImageTagResult r);
  const ImageTagResult* find(const std::string& image_ref) const;
  std::size_t size() const { return entries_.size(); }
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, ImageTagResult> entries_;
};

class ImageTagger {
 public:
  explicit ImageTagger(ClientConfig config);

  /// Throws NotFoundError on a fixture miss and TransportError when every live
  /// attempt fails.
  ImageTagResult tag(const std::string& image_ref);

  /// Tags many images with at most `max_concurrency` requests in flight.
  /// Results keep input order; a failed image rethrows its error.
  std::vector<ImageTagResult> tag_all(const std::vector<std::string>& image_refs);

  std::size_t requests_issued() const;

 private:
  std::optional<ImageTagResult> cache_get(const std::string& ref) const;
  void cache_put(const ImageTagResult& r);
  ImageTagResult request_live(const std::string& ref);

  ClientConfig config_;
  FixtureTable fixtures_;
  mutable std::mutex cache_mutex_;
  mutable std::mutex stats_mutex_;
  std::size_t requests_ = 0;
};

ImageTagResult tag_image(const std::string& image_ref, const ClientConfig& config);

/// Parses a Clarifai-style response body: outputs[0].data.concepts[{name,value}].
ImageTagResult parse_response(const std::string& image_ref, const std::string& body);

/// Drops tags below `confidence_threshold` (when confidences are present),
/// then averages the remaining tags exactly as a text view would.
ViewValue profile_image_embedding(const ImageTagResult& result, const we::WEModel& people_model,
                                  double confidence_threshold = 0.5);
ViewValue profile_image_embedding(const std::vector<std::string>& tags,
                                  const we::WEModel& people_model);

}  // namespace cme::imagetags

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

#include "cme/imagetags.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "cme/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cme::imagetags {

using nlohmann::json;

FixtureTable FixtureTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FixtureTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty() || line.front() == '#') continue;
    auto cols = util::split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(path.string(), lineno, "expected image_ref TAB tags [TAB confidences]");
    ImageTagResult r;
    r.image_ref = std::string(util::trim(cols[0]));
    for (auto t : util::split(cols[1], ','))
      if (auto s = util::trim(t); !s.empty()) r.tags.emplace_back(util::to_lower(s));
    if (r.tags.empty()) throw ParseError(path.string(), lineno, "fixture entry has no tags");
    if (cols.size() == 3) {
      std::vector<double> conf;
      for (auto c : util::split(cols[2], ',')) {
        try {
          conf.push_back(std::stod(std::string(util::trim(c))));
        } catch (const std::exception&) {
          throw ParseError(path.string(), lineno, "bad confidence value");
        }
      }
      if (conf.size() != r.tags.size())
        throw ParseError(path.string(), lineno, "confidence count does not match tag count");
      r.confidences = std::move(conf);
    }
    t.add(std::move(r));
  }
  return t;
}

void FixtureTable::add(ImageTagResult r) {
  auto key = r.image_ref;
  entries_.insert_or_assign(std::move(key), std::move(r));
}

const ImageTagResult* FixtureTable::find(const std::string& image_ref) const {
  auto it = entries_.find(image_ref);
  return it == entries_.end() ? nullptr : &it->second;
}

void FixtureTable::save(const std::filesystem::path& path) const {
  util::AtomicWriter w(path);
  for (const auto& [ref, r] : entries_) {
    w.stream() << ref << '\t' << util::join(r.tags, ",");
    if (r.confidences) {
      std::vector<std::string> c;
      for (double x : *r.confidences) c.push_back(util::format_double(x));
      w.stream() << '\t' << util::join(c, ",");
    }
    w.stream() << '\n';
  }
  w.commit();
}

ImageTagResult parse_response(const std::string& image_ref, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("malformed tagging response: ") + e.what(), 1);
  }
  ImageTagResult r;
  r.image_ref = image_ref;
  std::vector<double> conf;
  try {
    for (const auto& c : j.at("outputs").at(0).at("data").at("concepts")) {
      r.tags.push_back(util::to_lower(c.at("name").get<std::string>()));
      conf.push_back(c.value("value", 1.0));
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected tagging response shape: ") + e.what(), 1);
  }
  if (r.tags.empty()) throw NotFoundError("tagging service returned no tags for " + image_ref);
  r.confidences = std::move(conf);
  return r;
}

ImageTagger::ImageTagger(ClientConfig config) : config_(std::move(config)) {
  if (config_.mode == Mode::Fixture) {
    fixtures_ = FixtureTable::load(config_.fixture_path);
  } else if (config_.endpoint.empty()) {
    throw ConfigError("live image tagging needs an endpoint");
  }
  if (config_.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  if (config_.cache_dir) std::filesystem::create_directories(*config_.cache_dir);
}

std::size_t ImageTagger::requests_issued() const {
  std::lock_guard lock(stats_mutex_);
  return requests_;
}

std::optional<ImageTagResult> ImageTagger::cache_get(const std::string& ref) const {
  if (!config_.cache_dir) return std::nullopt;
  std::lock_guard lock(cache_mutex_);
  const auto path = *config_.cache_dir / (util::hex64(util::fnv1a(ref)) + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const json j = json::parse(util::read_file(path));
    if (j.at("image_ref").get<std::string>() != ref) return std::nullopt;
    ImageTagResult r;
    r.image_ref = ref;
    r.tags = j.at("tags").get<std::vector<std::string>>();
    if (j.contains("confidences")) r.confidences = j["confidences"].get<std::vector<double>>();
    return r;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entry: refetch
  }
}

void ImageTagger::cache_put(const ImageTagResult& r) {
  if (!config_.cache_dir) return;
  std::lock_guard lock(cache_mutex_);
  json j{{"image_ref", r.image_ref}, {"tags", r.tags}};
  if (r.confidences) j["confidences"] = *r.confidences;
  util::AtomicWriter w(*config_.cache_dir / (util::hex64(util::fnv1a(r.image_ref)) + ".json"));
  w.stream() << j.dump() << '\n';
  w.commit();
}

ImageTagResult ImageTagger::request_live(const std::string& ref) {
  // Split "scheme://host[:port]/path".
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  const std::string base = config_.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  json image;
  if (std::filesystem::is_regular_file(ref))
    image["base64"] = httplib::detail::base64_encode(util::read_file(ref));
  else
    image["url"] = ref;
  const json body{{"inputs", json::array({json{{"data", json{{"image", image}}}}})}};

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.credential_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Key ") + key);

  const int attempts = config_.retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1)
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms * (attempt - 1)));
    {
      std::lock_guard lock(stats_mutex_);
      ++requests_;
    }
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "request to " + config_.endpoint + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw TransportError("credential rejected by " + config_.endpoint + " (HTTP " +
                               std::to_string(res->status) + ")",
                           attempt);
    if (res->status >= 200 && res->status < 300) return parse_response(ref, res->body);
    last_error = "HTTP " + std::to_string(res->status) + " from " + config_.endpoint;
    if (res->status < 500 && res->status != 429) throw TransportError(last_error, attempt);
  }
  throw TransportError(last_error, attempts);
}

ImageTagResult ImageTagger::tag(const std::string& image_ref) {
  if (config_.mode == Mode::Fixture) {
    const auto* r = fixtures_.find(image_ref);
    if (!r) throw NotFoundError("no fixture entry for image '" + image_ref + "'");
    return *r;
  }
  if (auto cached = cache_get(image_ref)) return *cached;
  auto r = request_live(image_ref);
  cache_put(r);
  return r;
}

std::vector<ImageTagResult> ImageTagger::tag_all(const std::vector<std::string>& image_refs) {
  std::vector<ImageTagResult> out(image_refs.size());
  std::vector<std::exception_ptr> errors(image_refs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < image_refs.size(); i = next++) {
      try {
        out[i] = tag(image_refs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(config_.max_concurrency, std::max<std::size_t>(image_refs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ImageTagResult tag_image(const std::string& image_ref, const ClientConfig& config) {
  ImageTagger tagger(config);
  return tagger.tag(image_ref);
}

ViewValue profile_image_embedding(const ImageTagResult& result, const we::WEModel& people_model,
                                  double confidence_threshold) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < result.tags.size(); ++i)
    if (!result.confidences || (*result.confidences)[i] >= confidence_threshold)
      kept.push_back(result.tags[i]);
  return profile_image_embedding(kept, people_model);
}

ViewValue profile_image_embedding(const std::vector<std::string>& tags,
                                  const we::WEModel& people_model) {
  return we::view_embedding(tags, people_model);
}

}  // namespace cme::imagetags

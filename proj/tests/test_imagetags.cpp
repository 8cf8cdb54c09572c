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

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "cme/imagetags.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace cme;
using namespace cme::imagetags;

namespace {

const char* kBody =
    R"({"outputs":[{"data":{"concepts":[{"name":"Person","value":0.97},{"name":"logo","value":0.4}]}}]})";

// Local tagging endpoint. `fail_first` requests answer 500.
class MockService {
 public:
  explicit MockService(int fail_first = 0, int delay_ms = 0) : fail_first_(fail_first) {
    server_.Post("/v2/outputs", [this, delay_ms](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests_;
      const int now = ++in_flight_;
      int prev = peak_.load();
      while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
      }
      if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      {
        std::lock_guard lock(mu_);
        last_auth_ = req.get_header_value("Authorization");
        last_body_ = req.body;
      }
      --in_flight_;
      if (n <= fail_first_) {
        res.status = 500;
        return;
      }
      res.set_content(kBody, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockService() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v2/outputs"; }
  int requests() const { return requests_; }
  int peak() const { return peak_; }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int fail_first_;
  std::atomic<int> requests_{0}, in_flight_{0}, peak_{0};
  std::mutex mu_;
  std::string last_auth_, last_body_;
};

ClientConfig live(const std::string& endpoint) {
  ClientConfig c;
  c.mode = Mode::Live;
  c.endpoint = endpoint;
  c.retry_backoff_ms = 1;
  c.timeout_seconds = 2;
  return c;
}

we::WEModel people_model() {
  return we::WEModel({"person", "logo", "face"}, {1, 0, 0, 1, 0.5, 0.5}, 2);
}

}  // namespace

TEST(FixtureTable, LoadsAndAnswers) {
  testing_support::TempDir dir;
  const auto p = dir.write("tags.tsv", "# ref\ttags\nimg/a.jpg\tPerson, face\t0.9,0.3\nimg/b.jpg\tlogo\n");
  ClientConfig cfg;
  cfg.fixture_path = p;
  ImageTagger tagger(cfg);
  const auto a = tagger.tag("img/a.jpg");
  EXPECT_EQ(a.tags, (std::vector<std::string>{"person", "face"}));
  EXPECT_EQ(*a.confidences, (std::vector<double>{0.9, 0.3}));
  EXPECT_FALSE(tagger.tag("img/b.jpg").confidences);
  EXPECT_THROW(tagger.tag("img/zzz.jpg"), NotFoundError);
  EXPECT_EQ(tag_image("img/b.jpg", cfg).tags, (std::vector<std::string>{"logo"}));
}

TEST(FixtureTable, RejectsMalformedAndRoundTrips) {
  testing_support::TempDir dir;
  EXPECT_THROW(FixtureTable::load(dir.write("bad.tsv", "img\tperson,face\t0.9\n")), ParseError);
  EXPECT_THROW(FixtureTable::load(dir.write("bad2.tsv", "img-only\n")), ParseError);
  FixtureTable t;
  t.add({"x.jpg", {"person", "logo"}, std::vector<double>{0.5, 0.25}});
  t.add({"y.jpg", {"text"}, std::nullopt});
  t.save(dir / "t.tsv");
  const auto back = FixtureTable::load(dir / "t.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(*back.find("x.jpg"), *t.find("x.jpg"));
  EXPECT_EQ(*back.find("y.jpg"), *t.find("y.jpg"));
}

TEST(ParseResponse, ReadsConcepts) {
  const auto r = parse_response("u.jpg", kBody);
  EXPECT_EQ(r.tags, (std::vector<std::string>{"person", "logo"}));
  EXPECT_EQ(*r.confidences, (std::vector<double>{0.97, 0.4}));
  EXPECT_THROW(parse_response("u.jpg", "not json"), TransportError);
  EXPECT_THROW(parse_response("u.jpg", R"({"outputs":[]})"), TransportError);
}

TEST(LiveTagger, RetriesServerErrorsAndSendsCredential) {
  MockService svc(2);
  ::setenv("CME_TEST_TAGGER_KEY", "secret", 1);
  auto cfg = live(svc.endpoint());
  cfg.credential_env = "CME_TEST_TAGGER_KEY";
  ImageTagger tagger(cfg);
  const auto r = tagger.tag("https://example.org/a.jpg");
  EXPECT_EQ(r.tags, (std::vector<std::string>{"person", "logo"}));
  EXPECT_EQ(svc.requests(), 3);
  EXPECT_EQ(svc.last_auth(), "Key secret");
  EXPECT_NE(svc.last_body().find("https://example.org/a.jpg"), std::string::npos);
}

TEST(LiveTagger, GivesUpAfterConfiguredAttempts) {
  MockService svc(100);
  auto cfg = live(svc.endpoint());
  cfg.retries = 2;
  ImageTagger tagger(cfg);
  try {
    tagger.tag("a.jpg");
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(svc.requests(), 3);
}

TEST(LiveTagger, UnreachableEndpoint) {
  // Bind a port, then release it so nothing listens there.
  int port;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  auto cfg = live("http://127.0.0.1:" + std::to_string(port) + "/v2/outputs");
  cfg.retries = 1;
  ImageTagger tagger(cfg);
  try {
    tagger.tag("a.jpg");
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 2);
  }
  EXPECT_EQ(tagger.requests_issued(), 2u);
}

TEST(LiveTagger, CacheAvoidsSecondRequest) {
  MockService svc;
  testing_support::TempDir dir;
  auto cfg = live(svc.endpoint());
  cfg.cache_dir = dir / "cache";
  const auto first = ImageTagger(cfg).tag("a.jpg");
  ImageTagger second(cfg);
  EXPECT_EQ(second.tag("a.jpg"), first);
  EXPECT_EQ(svc.requests(), 1);
  EXPECT_EQ(second.requests_issued(), 0u);
}

TEST(LiveTagger, TagAllIsBoundedAndOrdered) {
  MockService svc(0, 30);
  auto cfg = live(svc.endpoint());
  cfg.max_concurrency = 3;
  ImageTagger tagger(cfg);
  std::vector<std::string> refs;
  for (int i = 0; i < 12; ++i) refs.push_back("img" + std::to_string(i) + ".jpg");
  const auto out = tagger.tag_all(refs);
  ASSERT_EQ(out.size(), refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) EXPECT_EQ(out[i].image_ref, refs[i]);
  EXPECT_LE(svc.peak(), 3);
  EXPECT_EQ(svc.requests(), 12);
}

TEST(LiveTagger, NeedsEndpoint) {
  ClientConfig cfg;
  cfg.mode = Mode::Live;
  EXPECT_THROW(ImageTagger{cfg}, ConfigError);
}

TEST(ProfileImageEmbedding, DelegatesToViewAverage) {
  const auto m = people_model();
  const ImageTagResult r{"a.jpg", {"person", "logo", "hat"}, std::nullopt};
  EXPECT_EQ(profile_image_embedding(r, m), we::view_embedding(r.tags, m));
  EXPECT_EQ(*profile_image_embedding(r, m), (Vector{0.5, 0.5}));
}

TEST(ProfileImageEmbedding, ThresholdDropsWeakTags) {
  const auto m = people_model();
  const ImageTagResult r{"a.jpg", {"person", "logo"}, std::vector<double>{0.9, 0.2}};
  EXPECT_EQ(*profile_image_embedding(r, m), *m.vector("person"));
  EXPECT_EQ(*profile_image_embedding(r, m, 0.1), (Vector{0.5, 0.5}));
  EXPECT_FALSE(profile_image_embedding(r, m, 0.95));
}

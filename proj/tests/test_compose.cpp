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

#include <algorithm>
#include <random>

#include "cme/compose.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cme;
using compose::ViewName;

namespace {

compose::ViewEmbeddingSet random_view(const std::string& name, std::size_t users, std::size_t dim,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  compose::ViewEmbeddingSet v(name, dim);
  for (std::size_t u = 0; u < users; ++u) {
    Vector x(dim);
    for (auto& e : x) e = g(rng);
    v.set("u" + std::to_string(1000 + u), x);
  }
  return v;
}

Vector add(const Vector& a, const Vector& b) {
  Vector out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

}  // namespace

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_DOUBLE_EQ(compose::spearman(x, std::vector<double>{10, 20, 30}).rho, 1.0);
  EXPECT_DOUBLE_EQ(compose::spearman(x, std::vector<double>{3, 2, 1}).rho, -1.0);
}

TEST(Spearman, HandComputedFivePointCase) {
  // d = (1,1,1,1,0), sum d^2 = 4, rho = 1 - 6*4 / (5*24) = 0.8.
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
  const auto r = compose::spearman(x, y);
  EXPECT_NEAR(r.rho, 0.8, 1e-15);
  EXPECT_EQ(r.n, 5u);
  EXPECT_NEAR(r.p_value, 0.10408803866182788, 1e-9);
}

TEST(Spearman, AverageRanksForTies) {
  EXPECT_EQ(compose::average_ranks(std::vector<double>{10, 20, 20, 5}),
            (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, RejectsDegenerateInput) {
  EXPECT_THROW(compose::spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
               ArgumentError);
  EXPECT_THROW(compose::spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               ArgumentError);
  EXPECT_THROW(compose::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
               ArgumentError);
}

TEST(Spearman, MatchesBruteForceOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> small(0, 6);  // forces ties
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng() % 18;
    std::vector<double> x(n), y(n);
    const bool ties = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? small(rng) : g(rng);
      y[i] = ties ? small(rng) : g(rng);
    }
    const auto rx = oracle::ranks(x), ry = oracle::ranks(y);
    if (std::all_of(rx.begin(), rx.end(), [&](auto r) { return r == rx[0]; }) ||
        std::all_of(ry.begin(), ry.end(), [&](auto r) { return r == ry[0]; }))
      continue;
    const auto got = compose::spearman(x, y);
    EXPECT_NEAR(got.rho, oracle::spearman_rho(x, y), 1e-12);
    if (std::fabs(got.rho) < 1.0 && n > 3) {
      const double t = got.rho * std::sqrt((n - 2.0) / (1.0 - got.rho * got.rho));
      EXPECT_NEAR(got.p_value, oracle::t_two_sided_p(t, n - 2.0), 1e-8);
    }
  }
}

TEST(Spearman, MonotoneTransformAndSymmetry) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = x[i] + g(rng);
  }
  std::vector<double> ex(x.size());
  std::transform(x.begin(), x.end(), ex.begin(), [](double v) { return std::exp(v); });
  const auto base = compose::spearman(x, y);
  EXPECT_EQ(compose::spearman(ex, y).rho, base.rho);
  EXPECT_EQ(compose::spearman(y, x).rho, base.rho);
  EXPECT_EQ(compose::spearman(y, x).p_value, base.p_value);
}

TEST(Spearman, DecisionMentionsOutcome) {
  std::vector<double> x(200), y(200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] = static_cast<double>(i);
  EXPECT_FALSE(compose::spearman(x, y).decision.empty());
}

TEST(CorrelateViews, SelfAndNegated) {
  const auto a = random_view("Tweet", 20, 5, 3);
  EXPECT_NEAR(compose::correlate_views(a, a).rho, 1.0, 1e-12);
  EXPECT_EQ(compose::correlate_views(a, a).n, 100u);
  compose::ViewEmbeddingSet neg("Neg", 5);
  for (const auto& [u, v] : a.entries()) {
    Vector x = *v;
    for (auto& e : x) e = -e;
    neg.set(u, x);
  }
  EXPECT_NEAR(compose::correlate_views(a, neg).rho, -1.0, 1e-12);
  EXPECT_NEAR(compose::correlate_views(a, a, compose::Pairing::PerUserMean).rho, 1.0, 1e-12);
}

TEST(CorrelateViews, IndependentViewsAreNearZero) {
  std::size_t large = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = random_view("A", 50, 10, 2 * s + 100);
    const auto b = random_view("B", 50, 10, 2 * s + 101);
    if (std::fabs(compose::correlate_views(a, b).rho) >= 0.1) ++large;
  }
  // n = 500 gives sd(rho) ~ 0.045, so |rho| >= 0.1 is a ~3% event.
  EXPECT_LE(large, 6u);
}

TEST(CorrelateViews, SkipsSentinelsAndNeedsThreeUsers) {
  auto a = random_view("A", 5, 3, 4);
  auto b = random_view("B", 5, 3, 5);
  b.set("u1000", std::nullopt);
  EXPECT_EQ(compose::correlate_views(a, b).n, 12u);
  b.set("u1001", std::nullopt);
  b.set("u1002", std::nullopt);
  EXPECT_THROW(compose::correlate_views(a, b), ArgumentError);
}

TEST(ComposeAdd, Examples) {
  const Vector v{1.5, -2, 3};
  const std::vector<ViewValue> with_zero{v, Vector{0, 0, 0}};
  EXPECT_EQ(*compose::compose_add(with_zero).vector, v);
  const std::vector<ViewValue> with_sentinel{v, std::nullopt};
  EXPECT_EQ(*compose::compose_add(with_sentinel).vector, v);
  const Vector w{0.25, 4, -1};
  const std::vector<ViewValue> two{v, w};
  EXPECT_EQ(*compose::compose_add(two).vector, add(v, w));
  const std::vector<ViewValue> none{std::nullopt, std::nullopt};
  EXPECT_FALSE(compose::compose_add(none).vector);
  const std::vector<ViewValue> bad{v, Vector{1, 2}};
  EXPECT_THROW(compose::compose_add(bad), ArgumentError);
}

TEST(ComposeAdd, CommutativeAndAssociative) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> grid(-4096, 4096);
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(8), b(8), c(8), da(8), db(8), dc(8);
    for (std::size_t k = 0; k < 8; ++k) {
      a[k] = g(rng) * 1e3;
      b[k] = g(rng);
      c[k] = g(rng) * 1e-3;
      da[k] = std::ldexp(grid(rng), -8);
      db[k] = std::ldexp(grid(rng), -8);
      dc[k] = std::ldexp(grid(rng), -8);
    }
    auto sum = [](std::vector<ViewValue> xs) { return *compose::compose_add(xs).vector; };
    const auto abc = sum({a, b, c});
    EXPECT_EQ(sum({c, a, b}), abc);
    EXPECT_EQ(sum({b, c, a}), abc);
    EXPECT_EQ(sum({a, b}), sum({b, a}));
    const auto left = sum({sum({a, b}), c}), right = sum({a, sum({b, c})});
    for (std::size_t k = 0; k < 8; ++k) {
      EXPECT_NEAR(left[k], abc[k], 4e-16 * std::fabs(a[k]) + 1e-300);
      EXPECT_NEAR(right[k], abc[k], 4e-16 * std::fabs(a[k]) + 1e-300);
    }
    EXPECT_EQ(sum({sum({da, db}), dc}), sum({da, sum({db, dc})}));
  }
}

TEST(Composition, Parsing) {
  EXPECT_EQ(compose::parse_composition("T+E").second,
            (std::vector<ViewName>{ViewName::Tweet, ViewName::TweetEmoji}));
  EXPECT_EQ(compose::parse_composition("D+E").second,
            (std::vector<ViewName>{ViewName::Description, ViewName::DescriptionEmoji}));
  EXPECT_EQ(compose::parse_composition("N+T+E").second,
            (std::vector<ViewName>{ViewName::Network, ViewName::Tweet, ViewName::TweetEmoji}));
  EXPECT_EQ(compose::parse_composition("Tweet+Description").first, compose::CompositionTag::Custom);
  EXPECT_THROW(compose::parse_composition("Tweet+Nope"), ConfigError);
  EXPECT_EQ(compose::parse_view(compose::view_name(ViewName::ProfileImage)), ViewName::ProfileImage);
}

TEST(BuildCme, SumsConstituentsAndReportsGaps) {
  std::map<ViewName, compose::ViewEmbeddingSet> views;
  compose::ViewEmbeddingSet t("Tweet", 2), e("TweetEmoji", 2), n("Network", 2);
  t.set("a", Vector{1, 2});
  t.set("b", Vector{3, 4});
  e.set("a", Vector{10, 20});
  e.set("b", std::nullopt);
  n.set("a", Vector{0, 0});
  views.emplace(ViewName::Tweet, t);
  views.emplace(ViewName::TweetEmoji, e);

  const auto te = compose::build_cme(views, compose::parse_composition("T+E").second, "T+E");
  EXPECT_EQ(**te.find("a"), (Vector{11, 22}));
  EXPECT_EQ(**te.find("b"), (Vector{3, 4}));

  EXPECT_THROW(compose::build_cme(views, compose::parse_composition("N+T+E").second, "N+T+E"),
               ConfigError);
  views.emplace(ViewName::Network, n);
  compose::CompositionReport report;
  const auto nte =
      compose::build_cme(views, compose::parse_composition("N+T+E").second, "N+T+E", &report);
  EXPECT_EQ(**nte.find("a"), **te.find("a"));
  EXPECT_EQ(**nte.find("b"), **te.find("b"));
  EXPECT_EQ(report.users, 2u);
  EXPECT_EQ(report.zero_filled["Network"], 1u);
  EXPECT_EQ(report.zero_filled["TweetEmoji"], 1u);
}

TEST(ViewEmbeddingSet, RejectsWrongDimension) {
  compose::ViewEmbeddingSet v("Tweet", 3);
  EXPECT_THROW(v.set("a", Vector{1, 2}), ArgumentError);
}

TEST(ViewEmbeddingSet, RoundTripKeepsSentinels) {
  testing_support::TempDir dir;
  auto v = random_view("Tweet", 6, 4, 7);
  v.set("u1003", std::nullopt);
  v.save(dir / "Tweet.tsv");
  const auto back = compose::ViewEmbeddingSet::load(dir / "Tweet.tsv", "Tweet");
  EXPECT_EQ(back.entries(), v.entries());
  EXPECT_EQ(back.sentinel_count(), 1u);
}

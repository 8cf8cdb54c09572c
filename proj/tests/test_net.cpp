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

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "cme/net.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cme;
using corpus::InteractionKind;
using corpus::InteractionRecord;
using numeric::Matrix;

namespace {

// Builds an InteractionMatrix whose dense form is `rows`, via records.
net::InteractionMatrix from_dense(const std::vector<std::vector<double>>& rows) {
  std::vector<InteractionRecord> recs;
  std::vector<UserId> r, c;
  for (std::size_t i = 0; i < rows.size(); ++i) r.push_back("r" + std::to_string(100 + i));
  for (std::size_t j = 0; j < rows[0].size(); ++j) c.push_back("c" + std::to_string(100 + j));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      if (rows[i][j] > 0)
        recs.push_back({r[i], c[j], InteractionKind::Mention, static_cast<std::uint64_t>(rows[i][j])});
  return net::build_adjacency(recs, r, c);
}

std::vector<std::vector<double>> random_counts(std::size_t m, std::size_t n, double density,
                                               std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> count(1, 9);
  std::vector<std::vector<double>> a(m, std::vector<double>(n, 0.0));
  for (auto& row : a)
    for (auto& x : row)
      if (keep(rng)) x = count(rng);
  return a;
}

Matrix random_psd(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix b(n, n);
  for (auto& x : b.data()) x = g(rng);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += b(i, k) * b(j, k);
      m(i, j) = s / n;
    }
  return m;
}

std::vector<double> eigen_oracle_values(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
  std::vector<double> v(solver.eigenvalues().data(), solver.eigenvalues().data() + m.rows());
  std::sort(v.rbegin(), v.rend());
  return v;
}

double max_orthonormality_error(const Matrix& u) {
  double worst = 0;
  for (std::size_t a = 0; a < u.cols(); ++a)
    for (std::size_t b = 0; b < u.cols(); ++b) {
      double s = 0;
      for (std::size_t i = 0; i < u.rows(); ++i) s += u(i, a) * u(i, b);
      worst = std::max(worst, std::fabs(s - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace

TEST(BuildAdjacency, Examples) {
  auto a = net::build_adjacency({{"u1", "u2", InteractionKind::Mention, 3}}, {"u1"}, {"u2"});
  EXPECT_EQ(a.counts.rows, 1u);
  EXPECT_EQ(a.counts.at(0, 0), 3.0);

  a = net::build_adjacency({{"u1", "u2", InteractionKind::Mention, 2},
                            {"u1", "u2", InteractionKind::Retweet, 1}},
                           {"u1"}, {"u2"});
  EXPECT_EQ(a.counts.at(0, 0), 3.0);
  EXPECT_EQ(a.counts.nnz(), 1u);

  a = net::build_adjacency({}, {"u1", "u2"}, {"u3"});
  EXPECT_EQ(a.counts.nnz(), 0u);
  EXPECT_EQ(a.counts.rows, 2u);
  EXPECT_EQ(a.counts.cols, 1u);
}

TEST(BuildAdjacency, SkipsUnknownUsers) {
  auto a = net::build_adjacency({{"u1", "u2", InteractionKind::Mention, 1},
                                 {"u9", "u2", InteractionKind::Mention, 1},
                                 {"u1", "u9", InteractionKind::Retweet, 1}},
                                {"u1"}, {"u2"});
  EXPECT_EQ(a.skipped, 2u);
  EXPECT_EQ(a.counts.nnz(), 1u);
}

TEST(BuildAdjacency, SourcesAndTargetsAreSortedUnique) {
  std::vector<InteractionRecord> recs{{"b", "x", InteractionKind::Mention, 1},
                                      {"a", "y", InteractionKind::Mention, 1},
                                      {"b", "y", InteractionKind::Retweet, 1}};
  EXPECT_EQ(net::sources_of(recs), (std::vector<UserId>{"a", "b"}));
  EXPECT_EQ(net::targets_of(recs), (std::vector<UserId>{"x", "y"}));
}

TEST(RowNormalize, Examples) {
  const auto n = net::row_normalize(from_dense({{2, 2}, {0, 0}, {1, 3}}));
  EXPECT_EQ(n.counts.at(0, 0), 0.5);
  EXPECT_EQ(n.counts.at(0, 1), 0.5);
  EXPECT_EQ(n.counts.at(1, 0), 0.0);
  EXPECT_EQ(n.counts.at(1, 1), 0.0);
  EXPECT_EQ(n.counts.at(2, 0), 0.25);
  EXPECT_EQ(n.counts.at(2, 1), 0.75);
}

TEST(RowNormalize, RowSumsAndIdempotence) {
  std::mt19937_64 rng(2);
  const auto a = from_dense(random_counts(40, 30, 0.2, rng));
  const auto once = net::row_normalize(a);
  const auto twice = net::row_normalize(once);
  for (std::size_t i = 0; i < once.counts.rows; ++i) {
    const double s = once.counts.row_sum(i);
    if (a.counts.row_sum(i) > 0)
      EXPECT_NEAR(s, 1.0, 1e-12);
    else
      EXPECT_EQ(s, 0.0);
  }
  const auto d1 = once.counts.to_dense(), d2 = twice.counts.to_dense();
  for (std::size_t k = 0; k < d1.data().size(); ++k) EXPECT_NEAR(d1.data()[k], d2.data()[k], 1e-15);
}

TEST(CosineMatrix, Examples) {
  const auto c = net::cosine_similarity_matrix(from_dense({{1, 0}, {1, 1}, {1, 0}, {0, 1}}));
  EXPECT_NEAR(c.values(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.values(0, 2), 1.0, 1e-15);
  EXPECT_EQ(c.values(0, 3), 0.0);
}

TEST(CosineMatrix, ZeroRowsGiveZero) {
  const auto c = net::cosine_similarity_matrix(from_dense({{1, 2}, {0, 0}}));
  EXPECT_EQ(c.zero_rows, (std::vector<std::size_t>{1}));
  EXPECT_EQ(c.values(1, 1), 0.0);
  EXPECT_EQ(c.values(0, 1), 0.0);
  EXPECT_EQ(c.values(1, 0), 0.0);
  EXPECT_NEAR(c.values(0, 0), 1.0, 1e-15);
}

TEST(CosineMatrix, InvariantsAndOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dense = random_counts(25, 18, 0.15, rng);
    const auto c = net::cosine_similarity_matrix(from_dense(dense));
    const auto want = oracle::dense_cosine(dense);
    for (std::size_t i = 0; i < 25; ++i) {
      for (std::size_t j = 0; j < 25; ++j) {
        EXPECT_NEAR(c.values(i, j), want[i][j], 1e-12);
        EXPECT_NEAR(c.values(i, j), c.values(j, i), 1e-10);
        EXPECT_GE(c.values(i, j), 0.0);
        EXPECT_LE(c.values(i, j), 1.0 + 1e-12);
      }
      const bool zero = std::all_of(dense[i].begin(), dense[i].end(), [](double x) { return x == 0; });
      EXPECT_NEAR(c.values(i, i), zero ? 0.0 : 1.0, 1e-12);
    }
  }
}

TEST(CosineMatrix, InvariantToRowScaling) {
  std::mt19937_64 rng(4);
  const auto a = from_dense(random_counts(15, 12, 0.3, rng));
  const auto raw = net::cosine_similarity_matrix(a);
  const auto normed = net::cosine_similarity_matrix(net::row_normalize(a));
  for (std::size_t k = 0; k < raw.values.data().size(); ++k)
    EXPECT_NEAR(raw.values.data()[k], normed.values.data()[k], 1e-12);
}

TEST(TruncatedSvd, Identity) {
  const auto f = net::truncated_svd(Matrix::identity(3), 3);
  for (double s : f.sigma) EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LT(max_orthonormality_error(f.u), 1e-12);
}

TEST(TruncatedSvd, Diagonal) {
  Matrix m(2, 2);
  m(0, 0) = 4;
  m(1, 1) = 1;
  const auto f = net::truncated_svd(m, 1);
  ASSERT_EQ(f.sigma.size(), 1u);
  EXPECT_NEAR(f.sigma[0], 4.0, 1e-12);
  EXPECT_NEAR(f.u(0, 0), 1.0, 1e-12);  // +e1 under the sign convention
  EXPECT_NEAR(f.u(1, 0), 0.0, 1e-12);
}

TEST(TruncatedSvd, RejectsBadK) {
  EXPECT_THROW(net::truncated_svd(Matrix::identity(3), 4), ArgumentError);
  EXPECT_THROW(net::truncated_svd(Matrix::identity(3), 0), ArgumentError);
}

TEST(TruncatedSvd, MatchesEigenOracleAndReconstructs) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 8u, 23u, 50u}) {
    const auto m = random_psd(n, rng);
    const auto f = net::truncated_svd(m, n);
    const auto want = eigen_oracle_values(m);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(f.sigma[i], want[i], 1e-8);
    EXPECT_TRUE(std::is_sorted(f.sigma.rbegin(), f.sigma.rend()));
    EXPECT_LT(max_orthonormality_error(f.u), 1e-8);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double r = 0;
        for (std::size_t c = 0; c < n; ++c) r += f.u(i, c) * f.sigma[c] * f.u(j, c);
        err += (m(i, j) - r) * (m(i, j) - r);
      }
    EXPECT_LT(std::sqrt(err), 1e-8);
  }
}

TEST(TruncatedSvd, JacobiAndQlAgree) {
  std::mt19937_64 rng(6);
  const auto m = random_psd(30, rng);
  net::EigenOptions jac, ql;
  jac.jacobi_limit = 1000;
  ql.jacobi_limit = 0;
  const auto a = net::truncated_svd(m, 10, jac);
  const auto b = net::truncated_svd(m, 10, ql);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a.sigma[i], b.sigma[i], 1e-9);
  // The sign convention makes the vectors comparable directly.
  for (std::size_t k = 0; k < a.u.data().size(); ++k) EXPECT_NEAR(a.u.data()[k], b.u.data()[k], 1e-7);
}

TEST(TruncatedSvd, SignConvention) {
  std::mt19937_64 rng(7);
  const auto f = net::truncated_svd(random_psd(12, rng), 12);
  for (std::size_t c = 0; c < f.u.cols(); ++c) {
    double best = 0;
    for (std::size_t i = 0; i < f.u.rows(); ++i)
      if (std::fabs(f.u(i, c)) > std::fabs(best)) best = f.u(i, c);
    EXPECT_GT(best, 0.0);
  }
}

TEST(NetworkEmbedding, Examples) {
  net::SVDFactors f{Matrix::identity(2), {2.0, 1.0}};
  const auto paper = net::network_embedding(f, {"a", "b"}, net::ScalingMode::Paper);
  EXPECT_EQ(paper.reduced.data(), (std::vector<double>{0.5, 0, 0, 1}));
  const auto conv = net::network_embedding(f, {"a", "b"}, net::ScalingMode::Conventional);
  EXPECT_EQ(conv.reduced.data(), (std::vector<double>{2, 0, 0, 1}));
  f.sigma = {2.0, 0.0};
  EXPECT_THROW(net::network_embedding(f, {"a", "b"}, net::ScalingMode::Paper), ArgumentError);
  EXPECT_NO_THROW(net::network_embedding(f, {"a", "b"}, net::ScalingMode::Conventional));
}

TEST(NetworkEmbedding, ModeNames) {
  EXPECT_EQ(net::parse_mode("paper"), net::ScalingMode::Paper);
  EXPECT_EQ(net::parse_mode("conventional"), net::ScalingMode::Conventional);
  EXPECT_EQ(net::mode_name(net::ScalingMode::Paper), "paper");
  EXPECT_THROW(net::parse_mode("whiten"), Error);
}

TEST(EmbedNetwork, ShapeChain) {
  std::mt19937_64 rng(8);
  std::vector<InteractionRecord> recs;
  std::vector<UserId> rows, cols;
  for (int i = 0; i < 60; ++i) rows.push_back("s" + std::to_string(100 + i));
  for (int j = 0; j < 90; ++j) cols.push_back("t" + std::to_string(100 + j));
  std::uniform_int_distribution<int> pick(0, 89);
  for (const auto& r : rows)
    for (int e = 0; e < 4; ++e)
      recs.push_back({r, cols[pick(rng)], InteractionKind::Retweet, 1});
  net::ChainOptions opts;
  opts.k = 20;
  opts.mode = net::ScalingMode::Conventional;
  const auto chain = net::embed_network(recs, rows, cols, opts);
  EXPECT_EQ(chain.adjacency.counts.rows, 60u);
  EXPECT_EQ(chain.adjacency.counts.cols, 90u);
  EXPECT_EQ(chain.cosine.values.rows(), 60u);
  EXPECT_EQ(chain.cosine.values.cols(), 60u);
  EXPECT_EQ(chain.embedding.reduced.rows(), 60u);
  EXPECT_EQ(chain.embedding.reduced.cols(), 20u);
  EXPECT_EQ(chain.embedding.row_ids, rows);
  for (double x : chain.embedding.reduced.data()) EXPECT_TRUE(std::isfinite(x));
}

TEST(EmbedNetwork, SavesInWordVectorLayout) {
  testing_support::TempDir dir;
  net::NetworkEmbedding e{Matrix::identity(2), {"a", "b"}, net::ScalingMode::Paper};
  net::save_embedding(e, dir / "n.txt");
  EXPECT_EQ(testing_support::slurp(dir / "n.txt"), "2 2\na 1 0\nb 0 1\n");
}

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
#include <string>
#include <vector>

#include "cme/common.hpp"
#include "cme/corpus.hpp"
#include "cme/numeric.hpp"

// Interaction counts -> row-stochastic adjacency -> user-by-user cosine
// similarity -> truncated eigendecomposition -> reduced network embedding.

namespace cme::net {

/// Compressed sparse rows; only nonzeros are stored.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_index;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  double at(std::size_t r, std::size_t c) const;
  double row_sum(std::size_t r) const;
  numeric::Matrix to_dense() const;
};

struct InteractionMatrix {
  SparseMatrix counts;
  std::vector<UserId> row_ids;  // sources
  std::vector<UserId> col_ids;  // targets
  /// Interactions whose source or target is outside the index lists.
  std::size_t skipped = 0;
};

struct CosineMatrix {
  numeric::Matrix values;  // m x m
  std::vector<UserId> row_ids;
  /// Rows with no interactions; their similarities (self included) are 0.
  std::vector<std::size_t> zero_rows;
};

struct SVDFactors {
  numeric::Matrix u;  // m x k, orthonormal columns
  Vector sigma;       // k values, descending
};

enum class ScalingMode { Paper, Conventional };

std::string_view mode_name(ScalingMode m);
ScalingMode parse_mode(std::string_view s);

struct NetworkEmbedding {
  numeric::Matrix reduced;  // m x k
  std::vector<UserId> row_ids;
  ScalingMode mode = ScalingMode::Paper;
};

/// Sorted, de-duplicated sources and targets of `interactions`.
std::vector<UserId> sources_of(const std::vector<corpus::InteractionRecord>& interactions);
std::vector<UserId> targets_of(const std::vector<corpus::InteractionRecord>& interactions);

/// A[i][j] = total mention + retweet count from rows[i] to cols[j].
InteractionMatrix build_adjacency(const std::vector<corpus::InteractionRecord>& interactions,
                                  const std::vector<UserId>& rows, const std::vector<UserId>& cols);

/// Scales each nonzero row to sum to 1. All-zero rows stay zero.
InteractionMatrix row_normalize(const InteractionMatrix& a);

/// Row-pairwise cosine similarity, symmetric by construction.
CosineMatrix cosine_similarity_matrix(const InteractionMatrix& a);

struct EigenOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 1000;
  /// Matrices up to this order use cyclic Jacobi; larger ones use Householder
  /// tridiagonalisation with implicit QL.
  std::size_t jacobi_limit = 200;
};

/// Top-k singular triples of a symmetric matrix via its eigendecomposition.
/// Each column of U is sign-flipped so its largest-magnitude entry is positive.
SVDFactors truncated_svd(const numeric::Matrix& m, std::size_t k, const EigenOptions& opts = {});

/// Paper: U * diag(1 / sigma). Conventional: U * diag(sigma).
NetworkEmbedding network_embedding(const SVDFactors& factors, std::vector<UserId> row_ids,
                                   ScalingMode mode, double tolerance = 1e-10);

// Symmetric eigensolvers, exposed for testing. Eigenpairs are returned
// unsorted; eigenvectors are the columns of `vectors`.
struct SymmetricEigen {
  Vector values;
  numeric::Matrix vectors;
  std::size_t iterations = 0;
};
SymmetricEigen jacobi_eigen(const numeric::Matrix& m, const EigenOptions& opts = {});
SymmetricEigen tridiagonal_ql_eigen(const numeric::Matrix& m, const EigenOptions& opts = {});

struct ChainOptions {
  std::size_t k = 300;  // clamped to m
  ScalingMode mode = ScalingMode::Paper;
  bool normalize_before_cosine = true;
  EigenOptions eigen;
};

struct ChainResult {
  InteractionMatrix adjacency;
  CosineMatrix cosine;
  SVDFactors factors;
  NetworkEmbedding embedding;
};

ChainResult embed_network(const std::vector<corpus::InteractionRecord>& interactions,
                          const std::vector<UserId>& rows, const std::vector<UserId>& cols,
                          const ChainOptions& opts);

/// Same text layout as word vectors, with user ids in place of words.
void save_embedding(const NetworkEmbedding& e, const std::filesystem::path& path);

}  // namespace cme::net

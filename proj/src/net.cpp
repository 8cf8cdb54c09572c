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

#include "cme/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "cme/util.hpp"

namespace cme::net {

using numeric::Matrix;

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
    if (col_index[p] == c) return values[p];
  return 0.0;
}

double SparseMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += values[p];
  return s;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) d(r, col_index[p]) = values[p];
  return d;
}

std::string_view mode_name(ScalingMode m) {
  return m == ScalingMode::Paper ? "paper" : "conventional";
}

ScalingMode parse_mode(std::string_view s) {
  if (s == "paper") return ScalingMode::Paper;
  if (s == "conventional") return ScalingMode::Conventional;
  throw ArgumentError("unknown scaling mode '" + std::string(s) + "'");
}

std::vector<UserId> sources_of(const std::vector<corpus::InteractionRecord>& interactions) {
  std::set<UserId> s;
  for (const auto& r : interactions) s.insert(r.source);
  return {s.begin(), s.end()};
}

std::vector<UserId> targets_of(const std::vector<corpus::InteractionRecord>& interactions) {
  std::set<UserId> s;
  for (const auto& r : interactions) s.insert(r.target);
  return {s.begin(), s.end()};
}

namespace {

std::unordered_map<UserId, std::size_t> index_list(const std::vector<UserId>& ids,
                                                   const char* what) {
  std::unordered_map<UserId, std::size_t> idx;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!idx.emplace(ids[i], i).second)
      throw ArgumentError(std::string("duplicate id '") + ids[i] + "' in " + what + " index");
  return idx;
}

void flip_sign_convention(Matrix& u) {
  for (std::size_t c = 0; c < u.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < u.rows(); ++r)
      if (std::fabs(u(r, c)) > std::fabs(u(best, c))) best = r;
    if (u.rows() && u(best, c) < 0.0)
      for (std::size_t r = 0; r < u.rows(); ++r) u(r, c) = -u(r, c);
  }
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

void require_square(const Matrix& m) {
  if (m.rows() != m.cols()) throw ArgumentError("matrix must be square");
}

}  // namespace

InteractionMatrix build_adjacency(const std::vector<corpus::InteractionRecord>& interactions,
                                  const std::vector<UserId>& rows,
                                  const std::vector<UserId>& cols) {
  const auto ridx = index_list(rows, "row");
  const auto cidx = index_list(cols, "column");

  InteractionMatrix out;
  out.row_ids = rows;
  out.col_ids = cols;
  std::vector<std::map<std::size_t, double>> acc(rows.size());
  for (const auto& r : interactions) {
    auto ri = ridx.find(r.source);
    auto ci = cidx.find(r.target);
    if (ri == ridx.end() || ci == cidx.end()) {
      ++out.skipped;
      continue;
    }
    acc[ri->second][ci->second] += static_cast<double>(r.count);
  }
  auto& a = out.counts;
  a.rows = rows.size();
  a.cols = cols.size();
  for (const auto& row : acc) {
    for (const auto& [c, v] : row) {
      a.col_index.push_back(c);
      a.values.push_back(v);
    }
    a.row_ptr.push_back(a.values.size());
  }
  return out;
}

InteractionMatrix row_normalize(const InteractionMatrix& a) {
  InteractionMatrix out = a;
  auto& m = out.counts;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double s = m.row_sum(r);
    if (s == 0.0) continue;
    for (std::size_t p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) m.values[p] /= s;
  }
  return out;
}

CosineMatrix cosine_similarity_matrix(const InteractionMatrix& a) {
  const auto& s = a.counts;
  const std::size_t m = s.rows;

  // Gram matrix via per-column posting lists.
  std::vector<std::vector<std::pair<std::size_t, double>>> by_col(s.cols);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p)
      if (s.values[p] != 0.0) by_col[s.col_index[p]].emplace_back(r, s.values[p]);

  Matrix gram(m, m);
  for (const auto& col : by_col)
    for (std::size_t x = 0; x < col.size(); ++x)
      for (std::size_t y = x; y < col.size(); ++y)
        gram(col[x].first, col[y].first) += col[x].second * col[y].second;

  CosineMatrix out;
  out.row_ids = a.row_ids;
  out.values = Matrix(m, m);
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    norms[i] = std::sqrt(gram(i, i));
    if (norms[i] == 0.0) out.zero_rows.push_back(i);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (norms[i] == 0.0) continue;
    out.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (norms[j] == 0.0) continue;
      const double c = std::clamp(gram(i, j) / (norms[i] * norms[j]), 0.0, 1.0);
      out.values(i, j) = c;
      out.values(j, i) = c;
    }
  }
  return out;
}

SymmetricEigen jacobi_eigen(const Matrix& input, const EigenOptions& opts) {
  require_square(input);
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(frobenius(input), std::numeric_limits<double>::min());

  std::size_t sweep = 0;
  for (; sweep < opts.max_iterations; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= opts.tolerance * 1e-6 * scale) break;

    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0 || std::fabs(apq) <= eps * std::sqrt(std::fabs(a(p, p) * a(q, q))) * 1e-3)
          continue;
        ++rotations;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (rotations == 0) break;
  }
  if (sweep == opts.max_iterations)
    throw Error("Jacobi eigensolver did not converge in " + std::to_string(sweep) + " sweeps");

  SymmetricEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  out.iterations = sweep;
  return out;
}

SymmetricEigen tridiagonal_ql_eigen(const Matrix& input, const EigenOptions& opts) {
  require_square(input);
  const std::size_t n = input.rows();
  SymmetricEigen out;
  if (n == 0) return out;
  Matrix v = input;
  Vector d(n), e(n);

  // Householder reduction to tridiagonal form, accumulating the transform in v.
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::fabs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  // Implicit QL on the tridiagonal matrix. Rotations act on eigenvector
  // columns, so work on the transpose to keep them contiguous.
  Matrix w(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) w(c, r) = v(r, c);

  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t total_iter = 0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::fabs(d[l]) + std::fabs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::fabs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;
    if (m > l) {
      std::size_t iter = 0;
      do {
        if (++iter > opts.max_iterations)
          throw Error("QL eigensolver did not converge at index " + std::to_string(l));
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          auto wi = w.row(ii);
          auto wi1 = w.row(ii + 1);
          for (std::size_t k = 0; k < n; ++k) {
            h = wi1[k];
            wi1[k] = s * wi[k] + c * h;
            wi[k] = c * wi[k] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::fabs(e[l]) > eps * tst1);
      total_iter += iter;
    }
    d[l] += f;
    e[l] = 0.0;
  }

  out.values = std::move(d);
  out.vectors = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out.vectors(c, r) = w(r, c);
  out.iterations = total_iter;
  return out;
}

SVDFactors truncated_svd(const Matrix& m, std::size_t k, const EigenOptions& opts) {
  require_square(m);
  const std::size_t n = m.rows();
  if (k < 1 || k > n)
    throw ArgumentError("k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  const double asym_tol = 1e-10 * std::max(1.0, frobenius(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > asym_tol)
        throw ArgumentError("matrix is not symmetric");

  SymmetricEigen eig = n <= opts.jacobi_limit ? jacobi_eigen(m, opts) : tridiagonal_ql_eigen(m, opts);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(eig.values[a]) > std::fabs(eig.values[b]);
  });

  SVDFactors out;
  out.u = Matrix(n, k);
  out.sigma.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = order[c];
    out.sigma[c] = std::fabs(eig.values[src]);
    for (std::size_t r = 0; r < n; ++r) out.u(r, c) = eig.vectors(r, src);
  }
  flip_sign_convention(out.u);
  return out;
}

NetworkEmbedding network_embedding(const SVDFactors& factors, std::vector<UserId> row_ids,
                                   ScalingMode mode, double tolerance) {
  const auto& u = factors.u;
  if (u.cols() != factors.sigma.size())
    throw ArgumentError("U has " + std::to_string(u.cols()) + " columns but " +
                        std::to_string(factors.sigma.size()) + " singular values given");
  if (!row_ids.empty() && row_ids.size() != u.rows())
    throw ArgumentError("row id count does not match U");
  Vector scale(factors.sigma.size());
  for (std::size_t c = 0; c < scale.size(); ++c) {
    const double s = factors.sigma[c];
    if (mode == ScalingMode::Paper) {
      if (!(s > tolerance))
        throw ArgumentError("singular value " + std::to_string(c) + " = " + util::format_double(s) +
                            " is not above tolerance; inverse scaling undefined");
      scale[c] = 1.0 / s;
    } else {
      scale[c] = s;
    }
  }
  NetworkEmbedding out;
  out.mode = mode;
  out.row_ids = std::move(row_ids);
  out.reduced = Matrix(u.rows(), u.cols());
  for (std::size_t r = 0; r < u.rows(); ++r)
    for (std::size_t c = 0; c < u.cols(); ++c) out.reduced(r, c) = u(r, c) * scale[c];
  return out;
}

ChainResult embed_network(const std::vector<corpus::InteractionRecord>& interactions,
                          const std::vector<UserId>& rows, const std::vector<UserId>& cols,
                          const ChainOptions& opts) {
  ChainResult out;
  out.adjacency = build_adjacency(interactions, rows, cols);
  const InteractionMatrix& basis =
      opts.normalize_before_cosine ? row_normalize(out.adjacency) : out.adjacency;
  out.cosine = cosine_similarity_matrix(basis);
  const std::size_t k = std::min(opts.k, rows.size());
  out.factors = truncated_svd(out.cosine.values, k, opts.eigen);
  out.embedding = network_embedding(out.factors, rows, opts.mode);
  return out;
}

void save_embedding(const NetworkEmbedding& e, const std::filesystem::path& path) {
  util::AtomicWriter w(path);
  auto& out = w.stream();
  out << e.reduced.rows() << ' ' << e.reduced.cols() << '\n';
  for (std::size_t r = 0; r < e.reduced.rows(); ++r) {
    out << e.row_ids.at(r);
    for (double x : e.reduced.row(r)) out << ' ' << util::format_double(x);
    out << '\n';
  }
  w.commit();
}

}  // namespace cme::net

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

#include "cme/compose.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cme/numeric.hpp"
#include "cme/util.hpp"

namespace cme::compose {

std::string_view view_name(ViewName v) {
  switch (v) {
    case ViewName::Tweet: return "Tweet";
    case ViewName::Description: return "Description";
    case ViewName::TweetEmoji: return "TweetEmoji";
    case ViewName::DescriptionEmoji: return "DescriptionEmoji";
    case ViewName::ProfileImage: return "ProfileImage";
    case ViewName::Network: return "Network";
  }
  return "?";
}

ViewName parse_view(std::string_view s) {
  const auto lower = util::to_lower(util::trim(s));
  for (ViewName v : kAllViews)
    if (util::to_lower(view_name(v)) == lower) return v;
  // Short aliases.
  if (lower == "t") return ViewName::Tweet;
  if (lower == "d") return ViewName::Description;
  if (lower == "n") return ViewName::Network;
  if (lower == "i") return ViewName::ProfileImage;
  throw ConfigError("unknown view '" + std::string(s) + "'");
}

void ViewEmbeddingSet::set(const UserId& user, ViewValue value) {
  if (value && value->size() != dim_)
    throw ArgumentError("view " + name_ + ": vector for '" + user + "' has dimension " +
                        std::to_string(value->size()) + ", expected " + std::to_string(dim_));
  values_.insert_or_assign(user, std::move(value));
}

const ViewValue* ViewEmbeddingSet::find(const UserId& user) const {
  auto it = values_.find(user);
  return it == values_.end() ? nullptr : &it->second;
}

std::size_t ViewEmbeddingSet::sentinel_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](const auto& kv) { return !kv.second; }));
}

void ViewEmbeddingSet::save(const std::filesystem::path& path) const {
  util::AtomicWriter w(path);
  util::AtomicWriter empty(path.string() + ".empty");
  w.stream() << (values_.size() - sentinel_count()) << ' ' << dim_ << '\n';
  for (const auto& [user, v] : values_) {
    if (!v) {
      empty.stream() << user << '\n';
      continue;
    }
    w.stream() << user;
    for (double x : *v) w.stream() << ' ' << util::format_double(x);
    w.stream() << '\n';
  }
  w.commit();
  empty.commit();
}

ViewEmbeddingSet ViewEmbeddingSet::load(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t count = 0, dim = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> count >> dim))
    throw ParseError(path.string(), 1, "expected '<rows> <dim>'");
  ViewEmbeddingSet out(std::move(name), dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = util::split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != dim + 1) throw ParseError(path.string(), lineno, "wrong field count");
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      try {
        v[k] = std::stod(parts[k + 1]);
      } catch (const std::exception&) {
        throw ParseError(path.string(), lineno, "bad number '" + parts[k + 1] + "'");
      }
    }
    out.set(parts[0], std::move(v));
  }
  const auto empty_path = std::filesystem::path(path.string() + ".empty");
  if (std::filesystem::exists(empty_path))
    for (auto& user : util::read_lines(empty_path)) out.set(user, std::nullopt);
  return out;
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

std::string render_decision(double p, double alpha) {
  std::ostringstream ss;
  if (p < alpha)
    ss << "p<" << alpha << ": reject H0 rho=0 (inverted framing: 'correlated' rejected)";
  else
    ss << "p>=" << alpha << ": H0 rho=0 not rejected (inverted framing: 'correlated' retained)";
  return ss.str();
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw ArgumentError("constant input: rank variance is zero");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, double alpha) {
  if (x.size() != y.size()) throw ArgumentError("spearman: inputs differ in length");
  if (x.size() < 3) throw ArgumentError("spearman: need at least 3 paired samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);

  CorrelationResult out;
  out.n = x.size();
  out.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);

  const double dof = static_cast<double>(out.n - 2);
  const double denom = (1.0 - out.rho) * (1.0 + out.rho);
  if (denom <= 0.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.rho * std::sqrt(dof / denom);
    boost::math::students_t_distribution<double> dist(dof);
    out.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))),
                             0.0, 1.0);
  }
  out.decision = render_decision(out.p_value, alpha);
  return out;
}

CorrelationResult correlate_views(const ViewEmbeddingSet& a, const ViewEmbeddingSet& b,
                                  Pairing pairing, double alpha) {
  if (a.dimension() != b.dimension())
    throw ArgumentError("views " + a.name() + " and " + b.name() + " differ in dimension");
  std::vector<double> xs, ys;
  std::vector<const Vector*> va, vb;
  for (const auto& [user, value] : a.entries()) {
    if (!value) continue;
    const ViewValue* other = b.find(user);
    if (!other || !*other) continue;
    va.push_back(&*value);
    vb.push_back(&**other);
  }
  if (va.size() < 3)
    throw ArgumentError("views " + a.name() + " and " + b.name() + " share only " +
                        std::to_string(va.size()) + " users with content (need 3)");
  for (std::size_t i = 0; i < va.size(); ++i) {
    xs.insert(xs.end(), va[i]->begin(), va[i]->end());
    ys.insert(ys.end(), vb[i]->begin(), vb[i]->end());
  }
  CorrelationResult flat = spearman(xs, ys, alpha);
  if (pairing == Pairing::Flatten) return flat;

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    try {
      sum += spearman(*va[i], *vb[i], alpha).rho;
      ++used;
    } catch (const ArgumentError&) {
      // constant or too-short vectors carry no rank information
    }
  }
  if (used == 0) throw ArgumentError("no user admits a per-user rank correlation");
  flat.rho = sum / static_cast<double>(used);
  return flat;
}

std::string_view tag_name(CompositionTag t) {
  switch (t) {
    case CompositionTag::TE: return "T+E";
    case CompositionTag::DE: return "D+E";
    case CompositionTag::NTE: return "N+T+E";
    case CompositionTag::Custom: return "custom";
  }
  return "?";
}

CMEVector compose_add(std::span<const ViewValue> vectors, CompositionTag tag) {
  CMEVector out;
  out.tag = tag;
  std::vector<const Vector*> live;
  for (const auto& v : vectors)
    if (v) live.push_back(&*v);
  if (live.empty()) return out;
  const std::size_t dim = live.front()->size();
  for (const auto* v : live)
    if (v->size() != dim)
      throw ArgumentError("compose_add: dimension mismatch (" + std::to_string(v->size()) +
                          " vs " + std::to_string(dim) + ")");
  Vector sum(dim);
  std::vector<double> terms(live.size());
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t i = 0; i < live.size(); ++i) terms[i] = (*live[i])[k];
    sum[k] = numeric::exact_sum(terms);
  }
  out.vector = std::move(sum);
  return out;
}

std::vector<ViewName> constituents(CompositionTag tag, std::string_view custom_spec) {
  switch (tag) {
    case CompositionTag::TE: return {ViewName::Tweet, ViewName::TweetEmoji};
    case CompositionTag::DE: return {ViewName::Description, ViewName::DescriptionEmoji};
    case CompositionTag::NTE: return {ViewName::Network, ViewName::Tweet, ViewName::TweetEmoji};
    case CompositionTag::Custom: break;
  }
  std::vector<ViewName> out;
  for (auto part : util::split(custom_spec, '+')) out.push_back(parse_view(part));
  return out;
}

std::pair<CompositionTag, std::vector<ViewName>> parse_composition(std::string_view spec) {
  const auto s = util::trim(spec);
  for (CompositionTag t : {CompositionTag::TE, CompositionTag::DE, CompositionTag::NTE})
    if (s == tag_name(t)) return {t, constituents(t)};
  if (s.empty()) throw ConfigError("empty composition spec");
  return {CompositionTag::Custom, constituents(CompositionTag::Custom, s)};
}

ViewEmbeddingSet build_cme(const std::map<ViewName, ViewEmbeddingSet>& views,
                           const std::vector<ViewName>& parts, const std::string& name,
                           CompositionReport* report) {
  if (parts.empty()) throw ConfigError("composition " + name + " has no constituents");
  std::vector<const ViewEmbeddingSet*> sets;
  for (ViewName v : parts) {
    auto it = views.find(v);
    if (it == views.end())
      throw ConfigError("composition " + name + " needs view " + std::string(view_name(v)) +
                        ", which has not been computed");
    sets.push_back(&it->second);
  }
  const std::size_t dim = sets.front()->dimension();
  for (const auto* s : sets)
    if (s->dimension() != dim)
      throw ConfigError("composition " + name + ": view " + s->name() + " has dimension " +
                        std::to_string(s->dimension()) + ", expected " + std::to_string(dim));

  std::set<UserId> users;
  for (const auto* s : sets)
    for (const auto& [u, _] : s->entries()) users.insert(u);

  CompositionReport rep;
  ViewEmbeddingSet out(name, dim);
  std::vector<ViewValue> parts_of_user(sets.size());
  for (const auto& user : users) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const ViewValue* v = sets[i]->find(user);
      parts_of_user[i] = v ? *v : std::nullopt;
      if (!parts_of_user[i]) ++rep.zero_filled[sets[i]->name()];
    }
    auto cme = compose_add(parts_of_user);
    if (!cme.vector) ++rep.all_sentinel;
    out.set(user, std::move(cme.vector));
  }
  rep.users = users.size();
  if (report) *report = std::move(rep);
  return out;
}

}  // namespace cme::compose

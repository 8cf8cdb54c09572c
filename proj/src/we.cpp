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

#include "cme/we.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "cme/util.hpp"

namespace cme::we {

void TrainingConfig::validate() const {
  if (dimension < 1) throw ArgumentError("dimension must be >= 1");
  if (window < 1) throw ArgumentError("window must be >= 1");
  if (negatives < 1) throw ArgumentError("negatives must be >= 1");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (subsample_threshold < 0.0) throw ArgumentError("subsample_threshold must be >= 0");
  if (threads < 1) throw ArgumentError("threads must be >= 1");
}

WEModel::WEModel(std::vector<std::string> words, std::vector<double> vectors,
                 std::size_t dimension, TrainingConfig config)
    : words_(std::move(words)), vectors_(std::move(vectors)), dim_(dimension),
      config_(std::move(config)) {
  if (vectors_.size() != words_.size() * dim_)
    throw ArgumentError("vector storage does not match vocabulary x dimension");
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!index_.emplace(words_[i], i).second)
      throw ValidationError("duplicate vocabulary word '" + words_[i] + "'");
}

std::optional<std::size_t> WEModel::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Vector> WEModel::vector(const std::string& word) const {
  auto idx = index_of(word);
  if (!idx) return std::nullopt;
  auto r = row(*idx);
  return Vector(r.begin(), r.end());
}

namespace {

constexpr std::size_t kUnigramTableSize = 1'000'000;

// Relaxed atomic access when several workers share the weights; plain access
// otherwise.
template <bool Shared>
struct Access {
  static double load(const double& x) {
    if constexpr (Shared)
      return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
    else
      return x;
  }
  static void add(double& x, double delta) {
    if constexpr (Shared) {
      std::atomic_ref<double> ref(x);
      ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
    } else {
      x += delta;
    }
  }
};

struct TrainingState {
  const TrainingConfig& cfg;
  std::size_t vocab_size;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_words = 0;
  std::vector<std::uint32_t> unigram_table;
  std::vector<double> syn0;  // word vectors
  std::vector<double> syn1;  // output (context) vectors
  std::atomic<std::uint64_t> processed{0};
};

template <bool Shared>
void train_worker(TrainingState& st, const std::vector<std::vector<std::uint32_t>>& sentences,
                  std::size_t begin, std::size_t end, std::uint64_t seed) {
  using A = Access<Shared>;
  const auto& cfg = st.cfg;
  const std::size_t dim = cfg.dimension;
  const std::uint64_t budget = cfg.epochs * st.total_words + 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> neu1e(dim);
  std::vector<std::uint32_t> sen;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto& raw = sentences[s];
      st.processed.fetch_add(raw.size(), std::memory_order_relaxed);
      sen.clear();
      for (std::uint32_t w : raw) {
        if (cfg.subsample_threshold > 0.0) {
          const double f = static_cast<double>(st.counts[w]);
          const double t = cfg.subsample_threshold * static_cast<double>(st.total_words);
          const double keep = (std::sqrt(f / t) + 1.0) * t / f;
          if (keep < unit(rng)) continue;
        }
        sen.push_back(w);
      }

      const double progress =
          static_cast<double>(st.processed.load(std::memory_order_relaxed)) / budget;
      const double alpha = cfg.learning_rate * std::max(1.0 - progress, 1e-4);

      for (std::size_t pos = 0; pos < sen.size(); ++pos) {
        const std::uint32_t word = sen[pos];
        const std::size_t shrink = rng() % cfg.window;
        const std::size_t reach = cfg.window - shrink;
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(sen.size() - 1, pos + reach);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          double* in = st.syn0.data() + static_cast<std::size_t>(sen[c]) * dim;
          std::fill(neu1e.begin(), neu1e.end(), 0.0);
          for (std::size_t d = 0; d <= cfg.negatives; ++d) {
            std::uint32_t target;
            double label;
            if (d == 0) {
              target = word;
              label = 1.0;
            } else {
              target = st.unigram_table[rng() % st.unigram_table.size()];
              if (target == word) continue;
              label = 0.0;
            }
            double* out = st.syn1.data() + static_cast<std::size_t>(target) * dim;
            double f = 0.0;
            for (std::size_t k = 0; k < dim; ++k) f += A::load(in[k]) * A::load(out[k]);
            const double g = (label - 1.0 / (1.0 + std::exp(-f))) * alpha;
            for (std::size_t k = 0; k < dim; ++k) neu1e[k] += g * A::load(out[k]);
            for (std::size_t k = 0; k < dim; ++k) A::add(out[k], g * A::load(in[k]));
          }
          for (std::size_t k = 0; k < dim; ++k) A::add(in[k], neu1e[k]);
        }
      }
    }
  }
}

}  // namespace

WEModel train_skipgram(const std::vector<text::TokenSet>& sentences, const TrainingConfig& config) {
  config.validate();

  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& s : sentences)
    for (const auto& w : s) ++freq[w];

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : freq)
    if (c >= config.min_count) kept.emplace_back(w, c);
  if (kept.empty())
    throw TrainingError("empty vocabulary after min_count=" + std::to_string(config.min_count) +
                        " filtering");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> index;
  TrainingState st{config, kept.size(), {}, 0, {}, {}, {}, {}};
  for (auto& [w, c] : kept) {
    index.emplace(w, static_cast<std::uint32_t>(words.size()));
    words.push_back(w);
    st.counts.push_back(c);
    st.total_words += c;
  }

  std::vector<std::vector<std::uint32_t>> encoded;
  encoded.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::uint32_t> e;
    for (const auto& w : s)
      if (auto it = index.find(w); it != index.end()) e.push_back(it->second);
    if (e.size() > 1) encoded.push_back(std::move(e));
  }

  // Negative-sampling table drawn from unigram^(3/4).
  {
    double norm = 0.0;
    for (auto c : st.counts) norm += std::pow(static_cast<double>(c), 0.75);
    st.unigram_table.resize(kUnigramTableSize);
    std::size_t w = 0;
    double cum = std::pow(static_cast<double>(st.counts[0]), 0.75) / norm;
    for (std::size_t a = 0; a < kUnigramTableSize; ++a) {
      st.unigram_table[a] = static_cast<std::uint32_t>(w);
      if (static_cast<double>(a) / kUnigramTableSize > cum && w + 1 < st.counts.size()) {
        ++w;
        cum += std::pow(static_cast<double>(st.counts[w]), 0.75) / norm;
      }
    }
  }

  const std::size_t dim = config.dimension;
  std::mt19937_64 init_rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  st.syn0.resize(words.size() * dim);
  for (auto& x : st.syn0) x = (unit(init_rng) - 0.5) / static_cast<double>(dim);
  st.syn1.assign(words.size() * dim, 0.0);

  if (config.threads <= 1) {
    train_worker<false>(st, encoded, 0, encoded.size(), config.seed ^ 0x9e3779b97f4a7c15ULL);
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = config.threads;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t b = encoded.size() * t / n, e = encoded.size() * (t + 1) / n;
      pool.emplace_back([&st, &encoded, b, e, seed = config.seed + 7919 * (t + 1)] {
        train_worker<true>(st, encoded, b, e, seed);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (double x : st.syn0)
    if (!std::isfinite(x)) throw TrainingError("training diverged (non-finite weights)");

  return WEModel(std::move(words), std::move(st.syn0), dim, config);
}

ViewValue view_embedding(const text::TokenSet& tokens, const WEModel& model) {
  // Accumulate in vocabulary order with multiplicities so the result does not
  // depend on token order.
  std::map<std::size_t, std::size_t> multiplicity;
  std::size_t n = 0;
  for (const auto& t : tokens) {
    if (auto idx = model.index_of(t)) {
      ++multiplicity[*idx];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  Vector sum(model.dimension(), 0.0);
  for (const auto& [idx, count] : multiplicity) {
    auto r = model.row(idx);
    const double c = static_cast<double>(count);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += c * r[k];
  }
  for (auto& x : sum) x /= static_cast<double>(n);
  return sum;
}

void save_text(const WEModel& model, const std::filesystem::path& path) {
  util::AtomicWriter w(path);
  auto& out = w.stream();
  out << model.size() << ' ' << model.dimension() << '\n';
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << model.words()[i];
    for (double x : model.row(i)) out << ' ' << util::format_double(x);
    out << '\n';
  }
  w.commit();
}

WEModel load_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header line");
  std::size_t vocab = 0, dim = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> vocab >> dim) || dim == 0) throw ParseError(src, 1, "expected '<vocab> <dim>'");
  }
  std::vector<std::string> words;
  std::vector<double> vecs;
  words.reserve(vocab);
  vecs.reserve(vocab * dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = util::split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != dim + 1)
      throw ParseError(src, lineno,
                       "expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(parts.size()));
    words.push_back(parts[0]);
    for (std::size_t k = 1; k <= dim; ++k) {
      try {
        std::size_t used = 0;
        vecs.push_back(std::stod(parts[k], &used));
        if (used != parts[k].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(src, lineno, "bad number '" + parts[k] + "'");
      }
    }
  }
  if (words.size() != vocab)
    throw ParseError(src, lineno,
                     "header declares " + std::to_string(vocab) + " rows, found " +
                         std::to_string(words.size()));
  return WEModel(std::move(words), std::move(vecs), dim);
}

}  // namespace cme::we

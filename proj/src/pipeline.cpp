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

#include "cme/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cme/corpus.hpp"
#include "cme/util.hpp"
#include "json.hpp"

#ifndef CME_DEFAULT_DATA_DIR
#define CME_DEFAULT_DATA_DIR "data"
#endif

namespace cme::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using compose::ViewName;

namespace {

// --- config parsing ---------------------------------------------------------

const std::map<std::string, std::set<std::string>> kKnownKeys{
    {"run", {"seed", "out"}},
    {"data", {"corpus", "stopwords", "lemmas", "names", "emoji_senses", "image_fixture"}},
    {"synth",
     {"users", "tweets_per_user", "words_per_tweet", "words_per_description", "tweet_signal",
      "description_signal", "overlap", "tweet_emoji_rate", "description_emoji_rate",
      "emoji_signal", "retweet_mean", "mention_mean", "hubs_per_class", "network_affinity",
      "image_signal", "tags_per_image"}},
    {"preprocess", {"hashtags"}},
    {"we", {"dimension", "window", "negatives", "epochs", "learning_rate", "min_count",
            "subsample", "threads"}},
    {"people_we", {"dimension", "window", "negatives", "epochs", "learning_rate", "min_count",
                   "subsample", "threads"}},
    {"views", {"emoji_repetition", "image_mode", "image_endpoint", "image_credential_env",
               "image_retries", "image_timeout", "image_concurrency", "image_cache",
               "image_confidence"}},
    {"network", {"k", "mode", "normalize", "jacobi_limit"}},
    {"correlate", {"pairs", "pairing", "alpha"}},
    {"compose", {"baseline", "suite_a", "suite_b"}},
    {"classify", {"family", "l2", "max_epochs", "step", "tolerance", "standardize", "folds",
                  "smote", "smote_k"}},
};

using Tree = boost::property_tree::ptree;

class Section {
 public:
  Section(const Tree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return std::string(util::trim(*v));
  }

  template <class T>
  void read(const std::string& key, T& out) const {
    auto v = raw(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        const auto s = util::to_lower(*v);
        if (s == "true" || s == "yes" || s == "1" || s == "on") out = true;
        else if (s == "false" || s == "no" || s == "0" || s == "off") out = false;
        else throw std::invalid_argument(s);
      } else if constexpr (std::is_same_v<T, double>) {
        out = std::stod(*v);
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->empty() && v->front() == '-') throw std::invalid_argument(*v);
        out = static_cast<T>(std::stoull(*v));
      } else {
        out = *v;
      }
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": cannot parse '" + *v + "'");
    }
  }

  template <class T>
  void read_per_class(const std::string& key, synth::PerClass<T>& out) const {
    auto v = raw(key);
    if (!v) return;
    auto parts = util::split(*v, ',');
    if (parts.size() != kNumClasses)
      throw ConfigError("[" + name_ + "] " + key + ": expected " + std::to_string(kNumClasses) +
                        " comma-separated values (personal, informed agency, retail)");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      try {
        if constexpr (std::is_same_v<T, double>)
          out[c] = std::stod(std::string(util::trim(parts[c])));
        else
          out[c] = static_cast<T>(std::stoull(std::string(util::trim(parts[c]))));
      } catch (const std::exception&) {
        throw ConfigError("[" + name_ + "] " + key + ": cannot parse '" + *v + "'");
      }
    }
  }

  std::optional<std::vector<std::string>> list(const std::string& key) const {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    for (auto p : util::split(*v, ','))
      if (auto s = util::trim(p); !s.empty()) out.emplace_back(s);
    return out;
  }

 private:
  const Tree* tree_;
  std::string name_;
};

void read_we(const Section& s, we::TrainingConfig& c) {
  s.read("dimension", c.dimension);
  s.read("window", c.window);
  s.read("negatives", c.negatives);
  s.read("epochs", c.epochs);
  s.read("learning_rate", c.learning_rate);
  s.read("min_count", c.min_count);
  s.read("subsample", c.subsample_threshold);
  s.read("threads", c.threads);
}

// --- stage plumbing ---------------------------------------------------------

void log(std::string_view stage, const std::string& msg) {
  std::cerr << "[cme " << stage << "] " << msg << '\n';
}

fs::path stage_dir(const PipelineConfig& cfg, std::string_view stage) {
  return cfg.run_dir() / std::string(stage);
}

// Each stage finishes by writing a manifest; downstream commands check for it.
void require_stage(const PipelineConfig& cfg, std::string_view stage, std::string_view command) {
  const auto m = stage_dir(cfg, stage) / "manifest.json";
  if (!fs::exists(m)) throw MissingArtifactError(m, std::string(command));
}

void write_manifest(const PipelineConfig& cfg, std::string_view stage, json extra = json::object()) {
  json j = std::move(extra);
  j["stage"] = stage;
  j["run"] = cfg.run_dir().filename().string();
  j["seed"] = cfg.stage_seed(stage);
  util::AtomicWriter w(stage_dir(cfg, stage) / "manifest.json");
  w.stream() << j.dump(2) << '\n';
  w.commit();
  log(stage, "seed " + std::to_string(cfg.stage_seed(stage)) + ", done");
}

void prepare_run_dir(const PipelineConfig& cfg) {
  fs::create_directories(cfg.run_dir());
  const auto copy = cfg.run_dir() / "config.ini";
  if (!fs::exists(copy)) {
    util::AtomicWriter w(copy);
    w.stream() << cfg.source_text;
    w.commit();
  }
}

fs::path corpus_dir(const PipelineConfig& cfg) {
  if (cfg.corpus_dir) return *cfg.corpus_dir;
  require_stage(cfg, "corpus", "synth");
  return stage_dir(cfg, "corpus");
}

std::string file_stem(const std::string& composition) {
  std::string out;
  for (char c : composition) out += (c == '+') ? '_' : c;
  return out;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string signed_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", precision, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// --- preprocessed records ---------------------------------------------------

struct UserTokens {
  UserId user_id;
  std::optional<ClassLabel> label;
  std::vector<text::TokenSet> tweets;
  text::TokenSet description;
  std::vector<std::string> tweet_emoji;
  std::vector<std::string> description_emoji;
};

std::vector<UserTokens> load_preprocessed(const PipelineConfig& cfg) {
  require_stage(cfg, "preprocess", "preprocess");
  std::vector<UserTokens> out;
  std::ifstream in(stage_dir(cfg, "preprocess") / "users.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    UserTokens u;
    u.user_id = j.at("user_id").get<std::string>();
    if (j.contains("label")) u.label = parse_class(j["label"].get<std::string>());
    u.tweets = j.at("tweets").get<std::vector<text::TokenSet>>();
    u.description = j.at("description").get<text::TokenSet>();
    u.tweet_emoji = j.at("tweet_emoji").get<std::vector<std::string>>();
    u.description_emoji = j.at("description_emoji").get<std::vector<std::string>>();
    out.push_back(std::move(u));
  }
  return out;
}

std::map<ViewName, fs::path> view_files(const PipelineConfig& cfg) {
  std::map<ViewName, fs::path> out;
  for (ViewName v : compose::kAllViews) {
    const std::string stage = v == ViewName::Network ? "network" : "views";
    out[v] = stage_dir(cfg, stage) / (std::string(compose::view_name(v)) + ".tsv");
  }
  return out;
}

compose::ViewEmbeddingSet load_view(const PipelineConfig& cfg, ViewName v) {
  if (v == ViewName::Network)
    require_stage(cfg, "network", "netembed");
  else
    require_stage(cfg, "views", "views");
  return compose::ViewEmbeddingSet::load(view_files(cfg).at(v), std::string(compose::view_name(v)));
}

std::vector<std::string> all_compositions(const PipelineConfig& cfg) {
  std::vector<std::string> out{cfg.baseline};
  for (const auto* list : {&cfg.suite_a, &cfg.suite_b})
    for (const auto& s : *list)
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

std::string canonical_name(const std::string& spec) {
  auto [tag, parts] = compose::parse_composition(spec);
  if (tag != compose::CompositionTag::Custom) return std::string(compose::tag_name(tag));
  std::vector<std::string> names;
  for (ViewName v : parts) names.emplace_back(compose::view_name(v));
  return util::join(names, "+");
}

}  // namespace

// --- config -----------------------------------------------------------------

PipelineConfig PipelineConfig::load(const fs::path& path, std::optional<std::uint64_t> seed_override,
                                    std::optional<fs::path> out_override) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
  PipelineConfig cfg;
  cfg.source_text = util::read_file(path);
  // Inline comments: a ';' or '#' preceded by whitespace ends the value.
  std::string stripped;
  {
    std::istringstream lines(cfg.source_text);
    std::string line;
    while (std::getline(lines, line)) {
      for (std::size_t i = 1; i < line.size(); ++i)
        if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
          line.resize(i);
          break;
        }
      stripped += line + '\n';
    }
  }
  Tree tree;
  try {
    std::istringstream in(stripped);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    auto known = kKnownKeys.find(section);
    if (known == kKnownKeys.end()) throw ConfigError("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' must live inside a section");
    for (const auto& [key, _] : body)
      if (!known->second.count(key))
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };
  const fs::path base = fs::absolute(path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  const fs::path data_dir = CME_DEFAULT_DATA_DIR;

  const auto run = section("run");
  run.read("seed", cfg.seed);
  if (auto o = run.raw("out")) cfg.out_base = resolve(*o);
  if (seed_override) cfg.seed = *seed_override;
  if (out_override) cfg.out_base = *out_override;

  const auto data = section("data");
  if (auto v = data.raw("corpus"); v && !v->empty()) cfg.corpus_dir = resolve(*v);
  cfg.stopwords = data.raw("stopwords") ? resolve(*data.raw("stopwords")) : data_dir / "stopwords.txt";
  cfg.lemmas = data.raw("lemmas") ? resolve(*data.raw("lemmas")) : data_dir / "lemmas.tsv";
  cfg.name_lexicon = data.raw("names") ? resolve(*data.raw("names")) : data_dir / "name_lexicon.txt";
  cfg.emoji_lexicon =
      data.raw("emoji_senses") ? resolve(*data.raw("emoji_senses")) : data_dir / "emoji_senses.tsv";
  if (auto v = data.raw("image_fixture"); v && !v->empty()) cfg.image_fixture = resolve(*v);

  const auto sy = section("synth");
  sy.read_per_class("users", cfg.synth.users);
  sy.read("tweets_per_user", cfg.synth.tweets_per_user);
  sy.read("words_per_tweet", cfg.synth.words_per_tweet);
  sy.read("words_per_description", cfg.synth.words_per_description);
  sy.read_per_class("tweet_signal", cfg.synth.tweet_signal);
  sy.read_per_class("description_signal", cfg.synth.description_signal);
  sy.read("overlap", cfg.synth.overlap);
  sy.read_per_class("tweet_emoji_rate", cfg.synth.tweet_emoji_rate);
  sy.read_per_class("description_emoji_rate", cfg.synth.description_emoji_rate);
  sy.read("emoji_signal", cfg.synth.emoji_signal);
  sy.read_per_class("retweet_mean", cfg.synth.retweet_mean);
  sy.read_per_class("mention_mean", cfg.synth.mention_mean);
  sy.read("hubs_per_class", cfg.synth.hubs_per_class);
  sy.read("network_affinity", cfg.synth.network_affinity);
  sy.read("image_signal", cfg.synth.image_signal);
  sy.read("tags_per_image", cfg.synth.tags_per_image);
  cfg.synth.validate();

  if (auto h = section("preprocess").raw("hashtags")) {
    const auto s = util::to_lower(*h);
    if (s == "keep") cfg.hashtags = text::HashtagPolicy::KeepBody;
    else if (s == "drop") cfg.hashtags = text::HashtagPolicy::Drop;
    else throw ConfigError("[preprocess] hashtags must be keep or drop");
  }

  read_we(section("we"), cfg.content_we);
  cfg.people_we = cfg.content_we;
  read_we(section("people_we"), cfg.people_we);
  cfg.content_we.validate();
  cfg.people_we.validate();
  if (cfg.content_we.dimension != cfg.people_we.dimension)
    throw ConfigError("content and people embeddings must share a dimension to be composed");

  const auto vw = section("views");
  if (auto r = vw.raw("emoji_repetition")) {
    const auto s = util::to_lower(*r);
    if (s == "multiset") cfg.emoji_repetition = emoji::Repetition::Multiset;
    else if (s == "set") cfg.emoji_repetition = emoji::Repetition::Set;
    else throw ConfigError("[views] emoji_repetition must be multiset or set");
  }
  if (auto m = vw.raw("image_mode")) {
    const auto s = util::to_lower(*m);
    if (s == "fixture") cfg.images.mode = imagetags::Mode::Fixture;
    else if (s == "live") cfg.images.mode = imagetags::Mode::Live;
    else throw ConfigError("[views] image_mode must be fixture or live");
  }
  vw.read("image_endpoint", cfg.images.endpoint);
  vw.read("image_credential_env", cfg.images.credential_env);
  vw.read("image_retries", cfg.images.retries);
  vw.read("image_timeout", cfg.images.timeout_seconds);
  vw.read("image_concurrency", cfg.images.max_concurrency);
  if (auto c = vw.raw("image_cache"); c && !c->empty()) cfg.images.cache_dir = resolve(*c);
  vw.read("image_confidence", cfg.image_confidence_threshold);

  const auto nw = section("network");
  nw.read("k", cfg.network.k);
  if (auto m = nw.raw("mode")) cfg.network.mode = net::parse_mode(*m);
  nw.read("normalize", cfg.network.normalize_before_cosine);
  nw.read("jacobi_limit", cfg.network.eigen.jacobi_limit);
  if (cfg.network.k < 1) throw ConfigError("[network] k must be >= 1");
  if (cfg.network.k > cfg.content_we.dimension)
    throw ConfigError("[network] k exceeds the word-embedding dimension; the network view could not be composed");

  const auto co = section("correlate");
  if (auto pairs = co.list("pairs")) {
    for (const auto& p : *pairs) {
      auto ab = util::split(p, ':');
      if (ab.size() != 2) throw ConfigError("[correlate] pairs entries look like Tweet:Network");
      cfg.correlation_pairs.emplace_back(compose::parse_view(ab[0]), compose::parse_view(ab[1]));
    }
  } else {
    cfg.correlation_pairs = {{ViewName::Description, ViewName::DescriptionEmoji},
                             {ViewName::Tweet, ViewName::TweetEmoji},
                             {ViewName::Tweet, ViewName::Network},
                             {ViewName::Description, ViewName::Network}};
  }
  if (auto p = co.raw("pairing")) {
    const auto s = util::to_lower(*p);
    if (s == "flatten") cfg.pairing = compose::Pairing::Flatten;
    else if (s == "per_user_mean") cfg.pairing = compose::Pairing::PerUserMean;
    else throw ConfigError("[correlate] pairing must be flatten or per_user_mean");
  }
  co.read("alpha", cfg.alpha);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("[correlate] alpha must lie in (0, 1)");

  const auto cm = section("compose");
  if (auto b = cm.raw("baseline")) cfg.baseline = *b;
  cfg.suite_a = cm.list("suite_a").value_or(std::vector<std::string>{
      "T+E", "D+E", "Tweet+TweetEmoji+Description+DescriptionEmoji",
      "Tweet+TweetEmoji+Description+DescriptionEmoji+ProfileImage"});
  cfg.suite_b = cm.list("suite_b").value_or(std::vector<std::string>{"N+T+E", "Network+Tweet+Description"});
  cfg.baseline = canonical_name(cfg.baseline);
  for (auto* list : {&cfg.suite_a, &cfg.suite_b})
    for (auto& s : *list) s = canonical_name(s);
  for (const auto& s : cfg.suite_a)
    for (ViewName v : compose::parse_composition(s).second)
      if (v == ViewName::Network)
        throw ConfigError("[compose] suite_a runs without network views; move " + s + " to suite_b");

  const auto cl = section("classify");
  if (auto f = cl.raw("family")) cfg.classifier.family = classify::parse_family(*f);
  cl.read("l2", cfg.classifier.l2);
  cl.read("max_epochs", cfg.classifier.max_epochs);
  cl.read("step", cfg.classifier.initial_step);
  cl.read("tolerance", cfg.classifier.gradient_tolerance);
  cl.read("standardize", cfg.classifier.standardize);
  cl.read("folds", cfg.folds);
  cl.read("smote", cfg.use_smote);
  cl.read("smote_k", cfg.smote_k);
  if (cfg.folds < 2) throw ConfigError("[classify] folds must be >= 2");

  // Seeds flow from the single run seed.
  cfg.synth.seed = cfg.stage_seed("corpus");
  cfg.content_we.seed = cfg.stage_seed("we.content");
  cfg.people_we.seed = cfg.stage_seed("we.people");
  cfg.classifier.seed = cfg.stage_seed("classify");
  return cfg;
}

fs::path PipelineConfig::run_dir() const {
  const auto h = util::fnv1a(source_text + "\nseed=" + std::to_string(seed));
  return out_base / ("run-" + util::hex64(h));
}

std::uint64_t PipelineConfig::stage_seed(std::string_view stage) const {
  // The corpus stage uses the run seed itself so `--seed` maps directly onto it.
  if (stage == "corpus") return seed;
  return util::fnv1a(stage, seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL) >> 1;
}

// --- commands ---------------------------------------------------------------

void cmd_synth(const PipelineConfig& cfg) {
  prepare_run_dir(cfg);
  log("corpus", "generating synthetic corpus");
  auto out = synth::generate(cfg.synth);
  const auto dir = stage_dir(cfg, "corpus");
  corpus::save_dataset(out.dataset, dir);
  out.image_tags.save(dir / "image_tags.tsv");
  const auto& counts = out.dataset.class_counts();
  write_manifest(cfg, "corpus",
                 {{"users", out.dataset.users().size()},
                  {"tweets", out.dataset.tweet_count()},
                  {"interactions", out.dataset.interactions().size()},
                  {"class_counts", counts}});
}

void cmd_preprocess(const PipelineConfig& cfg) {
  const auto dataset = corpus::load_dataset(corpus_dir(cfg));
  prepare_run_dir(cfg);
  text::Pipeline pipe{text::load_word_set(cfg.stopwords), text::load_lemma_table(cfg.lemmas),
                      cfg.hashtags};
  const auto names = text::load_word_set(cfg.name_lexicon);
  const auto dir = stage_dir(cfg, "preprocess");
  fs::create_directories(dir);

  constexpr std::array kFeatures{"tweets", "urls", "mentions", "retweets", "tweet_emoji",
                                 "description_emoji", "phones", "emails", "web", "person_name"};
  std::array<std::array<double, kFeatures.size()>, kNumClasses> sums{};

  util::AtomicWriter w(dir / "users.jsonl");
  for (const auto& user : dataset.users()) {
    json rec{{"user_id", user.user_id}};
    if (user.label) rec["label"] = class_code(*user.label);
    json tweets = json::array();
    std::vector<std::string> tweet_emoji;
    std::size_t urls = 0, mentions = 0, retweets = 0;
    for (const auto& t : dataset.tweets_of(user.user_id)) {
      auto r = pipe.run(t.raw_text);
      tweets.push_back(r.tokens);
      urls += r.entities.urls.size() + r.entities.contacts.web_addresses.size();
      mentions += r.entities.mentions.size();
      retweets += r.entities.retweet_source ? 1 : 0;
      tweet_emoji.insert(tweet_emoji.end(), r.entities.emoji.begin(), r.entities.emoji.end());
    }
    auto d = pipe.run(user.description);
    const bool person = text::match_person_name(user.name, names);
    rec["tweets"] = std::move(tweets);
    rec["description"] = d.tokens;
    rec["tweet_emoji"] = tweet_emoji;
    rec["description_emoji"] = d.entities.emoji;
    const std::array<double, kFeatures.size()> f{
        static_cast<double>(dataset.tweets_of(user.user_id).size()),
        static_cast<double>(urls),
        static_cast<double>(mentions),
        static_cast<double>(retweets),
        static_cast<double>(tweet_emoji.size()),
        static_cast<double>(d.entities.emoji.size()),
        static_cast<double>(d.entities.contacts.phones.size()),
        static_cast<double>(d.entities.contacts.emails.size()),
        static_cast<double>(d.entities.contacts.web_addresses.size() + d.entities.urls.size()),
        person ? 1.0 : 0.0};
    json feats;
    for (std::size_t i = 0; i < kFeatures.size(); ++i) feats[kFeatures[i]] = f[i];
    rec["features"] = std::move(feats);
    if (user.label)
      for (std::size_t i = 0; i < kFeatures.size(); ++i) sums[class_index(*user.label)][i] += f[i];
    w.stream() << rec.dump() << '\n';
  }
  w.commit();

  // Per-class means of the hand-built people/content features.
  util::AtomicWriter s(dir / "feature_summary.tsv");
  s.stream() << "feature";
  for (ClassLabel c : kAllClasses) s.stream() << '\t' << class_name(c);
  s.stream() << '\n';
  for (std::size_t i = 0; i < kFeatures.size(); ++i) {
    s.stream() << kFeatures[i];
    for (ClassLabel c : kAllClasses) {
      const auto n = dataset.class_counts()[class_index(c)];
      s.stream() << '\t' << fixed(n ? sums[class_index(c)][i] / static_cast<double>(n) : 0.0, 4);
    }
    s.stream() << '\n';
  }
  s.commit();
  write_manifest(cfg, "preprocess", {{"users", dataset.users().size()}});
}

void cmd_train_we(const PipelineConfig& cfg) {
  const auto users = load_preprocessed(cfg);
  std::vector<text::TokenSet> content, people;
  for (const auto& u : users) {
    for (const auto& t : u.tweets)
      if (!t.empty()) content.push_back(t);
    if (!u.description.empty()) people.push_back(u.description);
  }
  const auto dir = stage_dir(cfg, "we");
  fs::create_directories(dir);
  if (cfg.content_we.threads > 1 || cfg.people_we.threads > 1)
    log("we", "threads > 1: training is not bit-reproducible");
  log("we", "content model on " + std::to_string(content.size()) + " tweets, seed " +
                std::to_string(cfg.content_we.seed));
  const auto cm = we::train_skipgram(content, cfg.content_we);
  we::save_text(cm, dir / "content.txt");
  log("we", "people model on " + std::to_string(people.size()) + " descriptions, seed " +
                std::to_string(cfg.people_we.seed));
  const auto pm = we::train_skipgram(people, cfg.people_we);
  we::save_text(pm, dir / "people.txt");
  write_manifest(cfg, "we", {{"content_vocabulary", cm.size()},
                             {"people_vocabulary", pm.size()},
                             {"content_seed", cfg.content_we.seed},
                             {"people_seed", cfg.people_we.seed}});
}

void cmd_views(const PipelineConfig& cfg) {
  const auto users = load_preprocessed(cfg);
  require_stage(cfg, "we", "train-we");
  const auto content = we::load_text(stage_dir(cfg, "we") / "content.txt");
  const auto people = we::load_text(stage_dir(cfg, "we") / "people.txt");
  const auto lexicon = emoji::EmojiLexicon::load(cfg.emoji_lexicon);
  const auto dataset = corpus::load_dataset(corpus_dir(cfg));
  const std::size_t d = content.dimension();

  std::map<ViewName, compose::ViewEmbeddingSet> views;
  for (ViewName v : compose::kAllViews)
    if (v != ViewName::Network) views.emplace(v, compose::ViewEmbeddingSet(std::string(compose::view_name(v)), d));

  std::vector<const UserTokens*> labeled;
  for (const auto& u : users)
    if (u.label) labeled.push_back(&u);

  for (const auto* u : labeled) {
    text::TokenSet all;
    for (const auto& t : u->tweets) all.insert(all.end(), t.begin(), t.end());
    views.at(ViewName::Tweet).set(u->user_id, we::view_embedding(all, content));
    views.at(ViewName::Description).set(u->user_id, we::view_embedding(u->description, people));
    // Emoji senses are embedded with the content model for both text fields.
    views.at(ViewName::TweetEmoji)
        .set(u->user_id, emoji::emoji_embedding(u->tweet_emoji, lexicon, content, cfg.emoji_repetition));
    views.at(ViewName::DescriptionEmoji)
        .set(u->user_id,
             emoji::emoji_embedding(u->description_emoji, lexicon, content, cfg.emoji_repetition));
  }

  // Profile images.
  std::size_t untagged = 0;
  auto& image_view = views.at(ViewName::ProfileImage);
  imagetags::ClientConfig icfg = cfg.images;
  if (icfg.mode == imagetags::Mode::Fixture)
    icfg.fixture_path = cfg.image_fixture ? *cfg.image_fixture : corpus_dir(cfg) / "image_tags.tsv";
  if (icfg.mode == imagetags::Mode::Fixture && !fs::exists(icfg.fixture_path)) {
    log("views", "no image fixture at " + icfg.fixture_path.string() + "; profile-image view left empty");
    for (const auto* u : labeled) image_view.set(u->user_id, std::nullopt);
    untagged = labeled.size();
  } else {
    imagetags::ImageTagger tagger(icfg);
    std::vector<std::string> refs;
    std::vector<const UserTokens*> with_ref;
    for (const auto* u : labeled) {
      const auto* rec = dataset.find_user(u->user_id);
      if (rec && rec->profile_image_ref) {
        refs.push_back(*rec->profile_image_ref);
        with_ref.push_back(u);
      } else {
        image_view.set(u->user_id, std::nullopt);
        ++untagged;
      }
    }
    if (icfg.mode == imagetags::Mode::Live) {
      auto results = tagger.tag_all(refs);
      for (std::size_t i = 0; i < results.size(); ++i)
        image_view.set(with_ref[i]->user_id,
                       imagetags::profile_image_embedding(results[i], people, cfg.image_confidence_threshold));
    } else {
      for (std::size_t i = 0; i < refs.size(); ++i) {
        try {
          image_view.set(with_ref[i]->user_id,
                         imagetags::profile_image_embedding(tagger.tag(refs[i]), people,
                                                            cfg.image_confidence_threshold));
        } catch (const NotFoundError&) {
          image_view.set(with_ref[i]->user_id, std::nullopt);
          ++untagged;
        }
      }
    }
  }

  const auto dir = stage_dir(cfg, "views");
  fs::create_directories(dir);
  json sentinels;
  for (const auto& [v, set] : views) {
    set.save(dir / (std::string(compose::view_name(v)) + ".tsv"));
    sentinels[std::string(compose::view_name(v))] = set.sentinel_count();
  }
  write_manifest(cfg, "views", {{"users", labeled.size()}, {"empty_views", sentinels},
                                {"untagged_images", untagged}});
}

void cmd_netembed(const PipelineConfig& cfg) {
  const auto dataset = corpus::load_dataset(corpus_dir(cfg));
  require_stage(cfg, "we", "train-we");
  std::size_t d = 0;
  {
    std::ifstream in(stage_dir(cfg, "we") / "content.txt");
    std::size_t vocab = 0;
    in >> vocab >> d;
  }
  const auto rows = net::sources_of(dataset.interactions());
  const auto cols = net::targets_of(dataset.interactions());
  if (rows.empty()) throw ValidationError("the corpus has no interactions; nothing to embed");
  auto opts = cfg.network;
  opts.k = std::min(opts.k, rows.size());
  log("network", "adjacency " + std::to_string(rows.size()) + "x" + std::to_string(cols.size()) +
                     ", k " + std::to_string(opts.k) + ", mode " + std::string(net::mode_name(opts.mode)));
  const auto chain = net::embed_network(dataset.interactions(), rows, cols, opts);

  // Narrower embeddings are zero-padded to the word dimension so they compose.
  compose::ViewEmbeddingSet view("Network", d);
  const auto& red = chain.embedding.reduced;
  for (std::size_t i = 0; i < red.rows(); ++i) {
    Vector v(d, 0.0);
    for (std::size_t k = 0; k < red.cols(); ++k) v[k] = red(i, k);
    view.set(chain.embedding.row_ids[i], std::move(v));
  }
  const auto dir = stage_dir(cfg, "network");
  fs::create_directories(dir);
  view.save(dir / "Network.tsv");
  write_manifest(cfg, "network",
                 {{"adjacency", {chain.adjacency.counts.rows, chain.adjacency.counts.cols}},
                  {"cosine", {chain.cosine.values.rows(), chain.cosine.values.cols()}},
                  {"reduced", {red.rows(), red.cols()}},
                  {"padded_to", d},
                  {"zero_rows", chain.cosine.zero_rows.size()},
                  {"skipped_interactions", chain.adjacency.skipped},
                  {"mode", net::mode_name(opts.mode)},
                  {"sigma", chain.factors.sigma}});
}

void cmd_correlate(const PipelineConfig& cfg) {
  std::map<ViewName, compose::ViewEmbeddingSet> cache;
  auto get = [&](ViewName v) -> const compose::ViewEmbeddingSet& {
    auto it = cache.find(v);
    if (it == cache.end()) it = cache.emplace(v, load_view(cfg, v)).first;
    return it->second;
  };
  const auto dir = stage_dir(cfg, "correlate");
  std::vector<std::array<std::string, 6>> rows;
  for (const auto& [a, b] : cfg.correlation_pairs) {
    const auto r = compose::correlate_views(get(a), get(b), cfg.pairing, cfg.alpha);
    rows.push_back({std::string(compose::view_name(a)), std::string(compose::view_name(b)),
                    util::format_double(r.rho), util::format_double(r.p_value), std::to_string(r.n),
                    r.decision});
  }
  fs::create_directories(dir);
  util::AtomicWriter w(dir / "correlations.tsv");
  w.stream() << "view_a\tview_b\trho\tp_value\tn\tdecision\n";
  for (const auto& r : rows) w.stream() << util::join({r.begin(), r.end()}, "\t") << '\n';
  w.commit();
  write_manifest(cfg, "correlate", {{"pairs", rows.size()}});
}

void cmd_compose(const PipelineConfig& cfg) {
  const auto specs = all_compositions(cfg);
  std::map<ViewName, compose::ViewEmbeddingSet> views;
  for (const auto& s : specs)
    for (ViewName v : compose::parse_composition(s).second)
      if (!views.count(v)) views.emplace(v, load_view(cfg, v));
  const auto dir = stage_dir(cfg, "compose");
  fs::create_directories(dir);
  json summary = json::array();
  for (const auto& s : specs) {
    compose::CompositionReport rep;
    const auto set = compose::build_cme(views, compose::parse_composition(s).second, s, &rep);
    set.save(dir / (file_stem(s) + ".tsv"));
    summary.push_back({{"composition", s},
                       {"users", rep.users},
                       {"zero_filled", rep.zero_filled},
                       {"all_empty", rep.all_sentinel}});
    log("compose", s + ": " + std::to_string(rep.users) + " users, " +
                       std::to_string(rep.all_sentinel) + " with every view empty");
  }
  write_manifest(cfg, "compose", {{"compositions", summary}});
}

namespace {

struct SuiteResult {
  std::string name;
  classify::EvaluationReport report;
};

classify::CrossValidation run_cv(const PipelineConfig& cfg, const std::string& spec,
                                 const std::vector<UserId>& users, const classify::Labels& labels) {
  const auto set = compose::ViewEmbeddingSet::load(stage_dir(cfg, "compose") / (file_stem(spec) + ".tsv"), spec);
  classify::Matrix x(users.size(), set.dimension());
  std::size_t zero = 0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const ViewValue* v = set.find(users[i]);
    if (!v || !*v) {
      ++zero;
      continue;
    }
    std::copy((*v)->begin(), (*v)->end(), x.row(i).begin());
  }
  if (zero) log("classify", spec + ": " + std::to_string(zero) + " users without any view, fed as zeros");
  std::optional<classify::SMOTEConfig> sm;
  if (cfg.use_smote) {
    classify::SMOTEConfig c;
    c.k_neighbors = cfg.smote_k;
    c.seed = cfg.stage_seed("smote");
    c.allow_duplication = true;
    sm = c;
  }
  return classify::cross_validate(x, labels, cfg.folds, sm, cfg.classifier, cfg.stage_seed("folds"));
}

void save_eval(const fs::path& dir, const std::string& spec, const classify::EvaluationReport& r,
               const classify::Comparison& cmp) {
  fs::create_directories(dir);
  util::AtomicWriter t(dir / (file_stem(spec) + ".txt"));
  t.stream() << spec << "\n\n" << r.to_table() << "\nmacro-F1 delta vs " << cmp.baseline << ": "
             << signed_fixed(cmp.macro_f1_delta, 4) << " ("
             << signed_fixed(100.0 * cmp.relative_improvement, 2) << "%)\n";
  t.commit();
  auto j = r.to_json();
  j["composition"] = spec;
  j["comparison"] = {{"baseline", cmp.baseline},
                     {"macro_f1_delta", cmp.macro_f1_delta},
                     {"relative_improvement", cmp.relative_improvement},
                     {"accuracy_delta", cmp.accuracy_delta}};
  util::AtomicWriter jw(dir / (file_stem(spec) + ".json"));
  jw.stream() << j.dump(2) << '\n';
  jw.commit();
}

json suite_json(const std::vector<SuiteResult>& results, const SuiteResult& baseline) {
  json out = json::array();
  for (const auto& r : results) {
    const auto cmp = classify::compare(r.report, baseline.report, baseline.name);
    out.push_back({{"composition", r.name},
                   {"macro_f1", r.report.macro_f1},
                   {"accuracy", r.report.accuracy},
                   {"macro_f1_delta", cmp.macro_f1_delta},
                   {"relative_improvement", cmp.relative_improvement}});
  }
  return out;
}

}  // namespace

void cmd_classify(const PipelineConfig& cfg) {
  require_stage(cfg, "compose", "compose");
  const auto dataset = corpus::load_dataset(corpus_dir(cfg));
  std::vector<UserId> users;
  classify::Labels labels;
  for (const auto* u : dataset.labeled_users()) {
    users.push_back(u->user_id);
    labels.push_back(*u->label);
  }
  if (users.empty()) throw ValidationError("the corpus has no labeled users");

  const auto dir = stage_dir(cfg, "classify");
  std::vector<SuiteResult> suite_a;
  std::vector<std::string> names_a{cfg.baseline};
  for (const auto& s : cfg.suite_a)
    if (s != cfg.baseline) names_a.push_back(s);
  for (const auto& s : names_a) {
    log("classify", "suite A: " + s);
    suite_a.push_back({s, run_cv(cfg, s, users, labels).report});
  }
  for (const auto& r : suite_a)
    save_eval(dir / "suite_a", r.name, r.report, classify::compare(r.report, suite_a[0].report, suite_a[0].name));
  std::size_t best = 0;
  for (std::size_t i = 1; i < suite_a.size(); ++i)
    if (suite_a[i].report.macro_f1 > suite_a[best].report.macro_f1) best = i;

  json summary{{"folds", cfg.folds},
               {"smote", cfg.use_smote},
               {"family", classify::family_name(cfg.classifier.family)},
               {"users", users.size()},
               {"suite_a", suite_json(suite_a, suite_a[0])},
               {"suite_a_baseline", suite_a[0].name},
               {"best_suite_a", suite_a[best].name}};

  std::vector<SuiteResult> suite_b;
  bool needs_network = false;
  for (const auto& s : cfg.suite_b)
    for (ViewName v : compose::parse_composition(s).second) needs_network |= v == ViewName::Network;
  if (!cfg.suite_b.empty()) {
    // Suite B: users with outgoing interactions, i.e. rows of the network view.
    std::vector<UserId> sub_users;
    classify::Labels sub_labels;
    if (needs_network) {
      const auto netview = load_view(cfg, ViewName::Network);
      for (std::size_t i = 0; i < users.size(); ++i)
        if (netview.find(users[i])) {
          sub_users.push_back(users[i]);
          sub_labels.push_back(labels[i]);
        }
    } else {
      sub_users = users;
      sub_labels = labels;
    }
    const std::string base = suite_a[best].name;
    log("classify", "suite B: " + std::to_string(sub_users.size()) + " connected users, baseline " + base);
    suite_b.push_back({base, run_cv(cfg, base, sub_users, sub_labels).report});
    for (const auto& s : cfg.suite_b) {
      if (s == base) continue;
      log("classify", "suite B: " + s);
      suite_b.push_back({s, run_cv(cfg, s, sub_users, sub_labels).report});
    }
    for (const auto& r : suite_b)
      save_eval(dir / "suite_b", r.name, r.report, classify::compare(r.report, suite_b[0].report, suite_b[0].name));
    std::array<std::size_t, kNumClasses> counts{};
    for (auto l : sub_labels) ++counts[class_index(l)];
    summary["suite_b"] = suite_json(suite_b, suite_b[0]);
    summary["suite_b_baseline"] = base;
    summary["suite_b_users"] = sub_users.size();
    summary["suite_b_class_counts"] = counts;
  }
  summary["class_counts"] = dataset.class_counts();
  fs::create_directories(dir);
  util::AtomicWriter w(dir / "summary.json");
  w.stream() << summary.dump(2) << '\n';
  w.commit();
  write_manifest(cfg, "classify", {{"smote_seed", cfg.stage_seed("smote")},
                                   {"fold_seed", cfg.stage_seed("folds")},
                                   {"classifier_seed", cfg.classifier.seed}});
}

void cmd_report(const PipelineConfig& cfg) {
  require_stage(cfg, "classify", "classify");
  const json s = json::parse(util::read_file(stage_dir(cfg, "classify") / "summary.json"));
  std::ostringstream out;
  auto counts = [](const json& c) {
    std::string r;
    for (ClassLabel l : kAllClasses)
      r += std::string(r.empty() ? "" : ", ") + std::string(class_code(l)) + " " +
           std::to_string(c.at(class_index(l)).get<std::size_t>());
    return r;
  };
  out << "run " << cfg.run_dir().filename().string() << "  seed " << cfg.seed << '\n';
  out << "classifier " << s.at("family").get<std::string>() << ", " << s.at("folds").get<std::size_t>()
      << "-fold stratified CV, SMOTE " << (s.at("smote").get<bool>() ? "on" : "off")
      << " (training folds only)\n\n";

  auto table = [&](const json& rows) {
    std::size_t width = 14;
    for (const auto& r : rows) width = std::max(width, r.at("composition").get<std::string>().size() + 2);
    out << pad("composition", width) << pad("macro-F1", 10) << pad("accuracy", 10) << pad("delta", 10)
        << "relative\n";
    for (const auto& r : rows)
      out << pad(r.at("composition").get<std::string>(), width)
          << pad(fixed(r.at("macro_f1").get<double>(), 4), 10)
          << pad(fixed(r.at("accuracy").get<double>(), 4), 10)
          << pad(signed_fixed(r.at("macro_f1_delta").get<double>(), 4), 10)
          << signed_fixed(100.0 * r.at("relative_improvement").get<double>(), 2) << "%\n";
  };

  out << "Suite A: no network views, " << s.at("users").get<std::size_t>() << " labeled users ("
      << counts(s.at("class_counts")) << ")\nbaseline " << s.at("suite_a_baseline").get<std::string>()
      << "\n\n";
  table(s.at("suite_a"));
  out << "\nbest " << s.at("best_suite_a").get<std::string>() << "\n";
  if (s.contains("suite_b")) {
    out << "\nSuite B: network compositions, " << s.at("suite_b_users").get<std::size_t>()
        << " connected users (" << counts(s.at("suite_b_class_counts")) << ")\nbaseline "
        << s.at("suite_b_baseline").get<std::string>() << " (best of suite A)\n\n";
    table(s.at("suite_b"));
  }
  json report = s;
  const auto corr = stage_dir(cfg, "correlate") / "correlations.tsv";
  if (fs::exists(corr)) {
    out << "\nView correlations (Spearman, alpha " << util::format_double(cfg.alpha) << ")\n\n";
    out << pad("view pair", 34) << pad("rho", 12) << pad("p-value", 12) << pad("n", 10) << "decision\n";
    json cj = json::array();
    bool header = true;
    for (const auto& line : util::read_lines(corr)) {
      if (header) {
        header = false;
        continue;
      }
      auto f = util::split(line, '\t');
      if (f.size() != 6) continue;
      const double rho = std::stod(std::string(f[2]));
      const double p = std::stod(std::string(f[3]));
      char pbuf[32];
      std::snprintf(pbuf, sizeof pbuf, "%.3g", p);
      out << pad(std::string(f[0]) + " & " + std::string(f[1]), 34) << pad(fixed(rho, 4), 12)
          << pad(pbuf, 12) << pad(std::string(f[4]), 10) << f[5] << '\n';
      cj.push_back({{"view_a", f[0]}, {"view_b", f[1]}, {"rho", rho}, {"p_value", p},
                    {"n", std::stoull(std::string(f[4]))}, {"decision", f[5]}});
    }
    report["correlations"] = std::move(cj);
  }
  const auto dir = stage_dir(cfg, "report");
  fs::create_directories(dir);
  util::AtomicWriter t(dir / "report.txt");
  t.stream() << out.str();
  t.commit();
  util::AtomicWriter j(dir / "report.json");
  j.stream() << report.dump(2) << '\n';
  j.commit();
  write_manifest(cfg, "report");
  std::cout << out.str();
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth",     "preprocess", "train-we",
                                              "views",     "netembed",   "correlate",
                                              "compose",   "classify",   "report"};
  return names;
}

void run_command(std::string_view name, const PipelineConfig& cfg) {
  if (name == "synth") return cmd_synth(cfg);
  if (name == "preprocess") return cmd_preprocess(cfg);
  if (name == "train-we") return cmd_train_we(cfg);
  if (name == "views") return cmd_views(cfg);
  if (name == "netembed") return cmd_netembed(cfg);
  if (name == "correlate") return cmd_correlate(cfg);
  if (name == "compose") return cmd_compose(cfg);
  if (name == "classify") return cmd_classify(cfg);
  if (name == "report") return cmd_report(cfg);
  throw ArgumentError("unknown command '" + std::string(name) + "'");
}

fs::path report_path(const PipelineConfig& cfg) { return stage_dir(cfg, "report") / "report.txt"; }

}  // namespace cme::pipeline

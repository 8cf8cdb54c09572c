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

#include "cme/synth.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "cme/util.hpp"

namespace cme::synth {

namespace {

const PerClass<std::vector<std::string>> kClassWords{{
    {"family",   "friends",  "weekend",  "coffee",   "dinner",  "birthday", "mom",
     "dad",      "kids",     "vacation", "beach",    "movie",   "music",    "love",
     "happy",    "tired",    "sleep",    "breakfast", "pizza",  "gym",      "workout",
     "dog",      "cat",      "party",    "wedding",  "baby",    "school",   "homework",
     "football", "concert",  "selfie",   "holiday",  "garden",  "cooking",  "recipe",
     "sunday",   "chill",    "nap",      "hangout",  "bestie",  "memories", "hugs",
     "laugh",    "roadtrip", "summer",   "sister",   "brother", "grandma",  "puppy",
     "pancakes"},
    {"news",       "report",     "breaking",  "update",     "government", "policy",
     "election",   "council",    "minister",  "statement",  "announce",   "official",
     "press",      "conference", "analysis",  "economy",    "market",     "inflation",
     "budget",     "health",     "public",    "agency",     "research",   "study",
     "survey",     "alert",      "weather",   "traffic",    "investigation", "court",
     "ruling",     "senate",     "parliament", "journalist", "coverage",  "headline",
     "editorial",  "interview",  "briefing",  "release",    "committee",  "regulation",
     "emergency",  "safety",     "citizens",  "warning",    "forecast",   "developing",
     "officials",  "sources"},
    {"sale",      "discount", "shop",     "store",     "deal",     "offer",    "price",
     "order",     "shipping", "delivery", "product",   "collection", "brand",  "buy",
     "coupon",    "checkout", "cart",     "stock",     "launch",   "exclusive", "limited",
     "shoes",     "dress",    "jacket",   "fashion",   "outlet",   "bargain",  "clearance",
     "promo",     "gift",     "customer", "returns",   "size",     "color",    "style",
     "online",    "save",     "percent",  "arrival",   "wholesale", "boutique", "catalog",
     "items",     "purchase", "retail",   "sneakers",  "handbag",  "jewelry",  "savings",
     "instore"},
}};

const std::vector<std::string> kSharedWords{
    "today",  "time",    "day",     "week",    "year",    "people",   "good",    "great",
    "best",   "world",   "city",    "life",    "work",    "thanks",   "check",   "look",
    "see",    "know",    "think",   "want",    "need",    "make",     "take",    "come",
    "going",  "really",  "right",   "still",   "back",    "little",   "big",     "long",
    "never",  "always",  "place",   "thing",   "home",    "night",    "team",    "help",
    "start",  "open",    "together", "follow", "share",   "watch",    "read",    "live",
    "call",   "morning", "tonight", "tomorrow", "soon",   "hope",     "feel",    "amazing",
    "story",  "photo",   "video",   "person",  "face",    "portrait", "smile",   "logo",
    "text",   "graphic", "shopping", "man",    "woman",   "building", "street",  "coast",
    "town",   "event",   "weekday", "season",  "moment",  "friday",   "monday",  "area",
};

const PerClass<std::vector<std::string>> kClassEmoji{{
    {"\xF0\x9F\x98\x82", "\xE2\x9D\xA4", "\xF0\x9F\x98\x8D", "\xF0\x9F\x8E\x89",
     "\xF0\x9F\x90\xB6", "\xF0\x9F\x98\x8A"},
    {"\xF0\x9F\x93\xB0", "\xE2\x9A\xA0", "\xF0\x9F\x93\xA2", "\xF0\x9F\x94\xB4",
     "\xF0\x9F\x93\x8A"},
    {"\xF0\x9F\x9B\x8D", "\xF0\x9F\x92\xB8", "\xF0\x9F\x94\xA5", "\xF0\x9F\x8E\x81",
     "\xF0\x9F\x92\xAF", "\xF0\x9F\x9B\x92"},
}};

const std::vector<std::string> kSharedEmoji{"\xF0\x9F\x91\x8D", "\xF0\x9F\x99\x8F",
                                            "\xF0\x9F\x91\x8F", "\xF0\x9F\x98\x80",
                                            "\xE2\x9C\xA8"};

const PerClass<std::vector<std::string>> kImageTags{{
    {"person", "face", "portrait", "smile", "woman", "man"},
    {"logo", "text", "graphic", "building", "city"},
    {"logo", "product", "shopping", "store", "fashion"},
}};

const std::vector<std::string> kFirstNames{"anna",  "james", "maria", "david", "sarah",
                                           "li",    "omar",  "emma",  "lucas", "nina",
                                           "carlos", "yuki", "grace", "ivan",  "zoe"};
const std::vector<std::string> kLastNames{"smith", "garcia", "chen", "okafor", "miller",
                                          "rossi", "novak",  "kim",  "silva",  "brown"};
const std::vector<std::string> kPlaces{"metro", "valley", "harbor", "north", "river",
                                       "capital", "lake",  "county", "coast", "summit"};
const PerClass<std::vector<std::string>> kOrgSuffix{{
    {},
    {"News", "Daily", "Agency", "Times", "Watch", "Bureau"},
    {"Store", "Outlet", "Shop", "Boutique", "Market", "Deals"},
}};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::size_t>(mean)(rng_);
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  // Zipf-like rank preference within a pool.
  std::size_t zipf(std::size_t n) {
    auto it = zipf_cache_.find(n);
    if (it == zipf_cache_.end()) {
      std::vector<double> w(n);
      for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), 0.8);
      it = zipf_cache_.emplace(n, std::discrete_distribution<std::size_t>(w.begin(), w.end())).first;
    }
    return it->second(rng_);
  }

  template <class T>
  const T& pick(const std::vector<T>& pool) { return pool[index(pool.size())]; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::map<std::size_t, std::discrete_distribution<std::size_t>> zipf_cache_;
};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

ClassLabel other_class(ClassLabel c, Sampler& s) {
  const std::size_t shift = 1 + s.index(kNumClasses - 1);
  return class_from_index((class_index(c) + shift) % kNumClasses);
}

std::string draw_word(ClassLabel c, double signal, double overlap, Sampler& s) {
  if (s.bernoulli(signal)) {
    const ClassLabel from = s.bernoulli(overlap) ? other_class(c, s) : c;
    const auto& pool = kClassWords[class_index(from)];
    return pool[s.zipf(pool.size())];
  }
  return kSharedWords[s.zipf(kSharedWords.size())];
}

std::string draw_emoji(ClassLabel c, double signal, Sampler& s) {
  if (s.bernoulli(signal)) return s.pick(kClassEmoji[class_index(c)]);
  return s.pick(kSharedEmoji);
}

std::string draw_text(ClassLabel c, double words_mean, std::size_t min_words, double signal,
                      double overlap, double emoji_rate, double emoji_signal, Sampler& s) {
  const std::size_t n = std::max(min_words, s.poisson(words_mean));
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < n; ++i) parts.push_back(draw_word(c, signal, overlap, s));
  const std::size_t ne = s.poisson(emoji_rate);
  for (std::size_t i = 0; i < ne; ++i) {
    // Emoji go at a random position, sometimes glued to the previous word.
    const std::size_t at = s.index(parts.size() + 1);
    auto e = draw_emoji(c, emoji_signal, s);
    if (at > 0 && s.bernoulli(0.3))
      parts[at - 1] += e;
    else
      parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(at), std::move(e));
  }
  if (!parts.empty()) parts[0] = capitalize(parts[0]);
  return util::join(parts, " ");
}

}  // namespace

void SynthConfig::validate() const {
  auto nonneg = [](double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be >= 0");
  };
  auto prob = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
  };
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (users[c] < 1) throw ConfigError("every class needs at least one user");
    nonneg(retweet_mean[c], "retweet rate");
    nonneg(mention_mean[c], "mention rate");
    nonneg(tweet_emoji_rate[c], "tweet emoji rate");
    nonneg(description_emoji_rate[c], "description emoji rate");
    prob(tweet_signal[c], "tweet signal");
    prob(description_signal[c], "description signal");
  }
  nonneg(tweets_per_user, "tweets per user");
  nonneg(words_per_tweet, "words per tweet");
  nonneg(words_per_description, "words per description");
  nonneg(tags_per_image, "tags per image");
  prob(overlap, "overlap");
  prob(emoji_signal, "emoji signal");
  prob(network_affinity, "network affinity");
  prob(image_signal, "image signal");
  if (hubs_per_class < 1) throw ConfigError("hubs_per_class must be >= 1");
}

const std::vector<std::string>& class_words(ClassLabel c) { return kClassWords[class_index(c)]; }
const std::vector<std::string>& shared_words() { return kSharedWords; }
const std::vector<std::string>& class_emoji(ClassLabel c) { return kClassEmoji[class_index(c)]; }
const std::vector<std::string>& shared_emoji() { return kSharedEmoji; }

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  Sampler s(config.seed);

  std::vector<corpus::UserRecord> users;
  std::vector<corpus::TweetRecord> tweets;
  std::map<UserId, ClassLabel> labels;
  imagetags::FixtureTable images;

  auto make_name = [&](ClassLabel c) {
    if (c == ClassLabel::Personal)
      return capitalize(s.pick(kFirstNames)) + " " + capitalize(s.pick(kLastNames));
    return capitalize(s.pick(kPlaces)) + " " + s.pick(kOrgSuffix[class_index(c)]);
  };
  auto screen_of = [](const std::string& name, std::size_t n) {
    std::string out;
    for (char ch : util::to_lower(name))
      if (ch != ' ') out += ch;
    return out + std::to_string(n);
  };

  // Hubs: unlabeled accounts that labeled users retweet and mention.
  PerClass<std::vector<std::size_t>> hubs_by_class;
  std::vector<ClassLabel> hub_classes;
  std::size_t serial = 0;
  for (ClassLabel c : kAllClasses) {
    for (std::size_t i = 0; i < config.hubs_per_class; ++i) {
      corpus::UserRecord u;
      ++serial;
      u.user_id = "h" + std::to_string(100000 + serial);
      u.name = make_name(c);
      u.screen_name = screen_of(u.name, serial);
      u.description = draw_text(c, config.words_per_description, 2, config.description_signal[class_index(c)],
                                config.overlap, 0.0, config.emoji_signal, s);
      hubs_by_class[class_index(c)].push_back(users.size());
      hub_classes.push_back(c);
      users.push_back(std::move(u));
    }
  }
  const std::size_t hub_count = users.size();

  // Labeled users in shuffled class order so ids carry no label information.
  std::vector<ClassLabel> order;
  for (ClassLabel c : kAllClasses) order.insert(order.end(), config.users[class_index(c)], c);
  std::shuffle(order.begin(), order.end(), s.engine());

  std::map<std::tuple<UserId, UserId, corpus::InteractionKind>, std::uint64_t> edges;
  std::size_t tweet_serial = 0;
  auto next_tweet_id = [&] { return "t" + std::to_string(1000000 + ++tweet_serial); };

  for (std::size_t n = 0; n < order.size(); ++n) {
    const ClassLabel c = order[n];
    const std::size_t ci = class_index(c);
    corpus::UserRecord u;
    u.user_id = "u" + std::to_string(100000 + n + 1);
    u.name = make_name(c);
    u.screen_name = screen_of(u.name, n + 1);
    u.description = draw_text(c, config.words_per_description, 2, config.description_signal[ci],
                              config.overlap, config.description_emoji_rate[ci],
                              config.emoji_signal, s);
    u.profile_image_ref = "img/" + u.user_id + ".jpg";
    u.label = c;
    labels.emplace(u.user_id, c);

    imagetags::ImageTagResult img;
    img.image_ref = *u.profile_image_ref;
    std::set<std::string> seen;
    const std::size_t ntags = std::max<std::size_t>(1, s.poisson(config.tags_per_image));
    std::vector<double> conf;
    for (std::size_t t = 0; t < ntags; ++t) {
      const auto& pool = s.bernoulli(config.image_signal) ? kImageTags[ci]
                                                          : kImageTags[s.index(kNumClasses)];
      auto tag = s.pick(pool);
      if (!seen.insert(tag).second) continue;
      img.tags.push_back(tag);
      conf.push_back(std::round((0.35 + 0.64 * s.uniform()) * 100.0) / 100.0);
    }
    img.confidences = std::move(conf);
    images.add(std::move(img));

    auto pick_target = [&]() -> const corpus::UserRecord& {
      if (s.bernoulli(config.network_affinity)) {
        const auto& pool = hubs_by_class[ci];
        return users[pool[s.zipf(pool.size())]];
      }
      return users[s.index(hub_count)];
    };

    std::vector<corpus::TweetRecord> own;
    const std::size_t nt = std::max<std::size_t>(1, s.poisson(config.tweets_per_user));
    for (std::size_t t = 0; t < nt; ++t) {
      corpus::TweetRecord tw;
      tw.tweet_id = next_tweet_id();
      tw.author_id = u.user_id;
      tw.raw_text = draw_text(c, config.words_per_tweet, 3, config.tweet_signal[ci], config.overlap,
                              config.tweet_emoji_rate[ci], config.emoji_signal, s);
      if (s.bernoulli(0.1)) tw.raw_text += " https://t.co/" + util::hex64(s.engine()()).substr(0, 10);
      own.push_back(std::move(tw));
    }

    const std::size_t nm = s.poisson(config.mention_mean[ci]);
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& hub = pick_target();
      ++edges[{u.user_id, hub.user_id, corpus::InteractionKind::Mention}];
      own[s.index(own.size())].raw_text += " @" + hub.screen_name;
    }
    const std::size_t nr = s.poisson(config.retweet_mean[ci]);
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& hub = pick_target();
      ++edges[{u.user_id, hub.user_id, corpus::InteractionKind::Retweet}];
      // Retweeted content reads like the hub, not like the retweeter.
      const ClassLabel hub_class = hub_classes[static_cast<std::size_t>(&hub - users.data())];
      corpus::TweetRecord tw;
      tw.tweet_id = next_tweet_id();
      tw.author_id = u.user_id;
      tw.retweet_of = hub.user_id;
      tw.raw_text = "RT @" + hub.screen_name + ": " +
                    draw_text(hub_class, config.words_per_tweet, 3,
                              config.tweet_signal[class_index(hub_class)], config.overlap,
                              config.tweet_emoji_rate[class_index(hub_class)],
                              config.emoji_signal, s);
      own.push_back(std::move(tw));
    }
    for (auto& tw : own) tweets.push_back(std::move(tw));
    users.push_back(std::move(u));
  }

  std::vector<corpus::InteractionRecord> interactions;
  for (const auto& [key, count] : edges) {
    const auto& [src, dst, kind] = key;
    interactions.push_back({src, dst, kind, count});
  }
  return {corpus::assemble_dataset(std::move(users), std::move(tweets), std::move(interactions),
                                   labels),
          std::move(images)};
}

TopicCorpus two_topic_corpus(std::size_t words_per_topic, std::size_t sentences,
                             std::size_t sentence_length, std::uint64_t seed) {
  TopicCorpus out;
  const auto& a = kClassWords[0];
  const auto& b = kClassWords[1];
  if (words_per_topic == 0 || words_per_topic > std::min(a.size(), b.size()))
    throw ArgumentError("words_per_topic must lie in [1, " + std::to_string(std::min(a.size(), b.size())) + "]");
  out.topic_words[0].assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(words_per_topic));
  out.topic_words[1].assign(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(words_per_topic));
  Sampler s(seed);
  for (std::size_t i = 0; i < sentences; ++i) {
    const auto& topic = out.topic_words[s.index(2)];
    text::TokenSet sentence;
    for (std::size_t t = 0; t < sentence_length; ++t)
      sentence.push_back(s.bernoulli(0.8) ? s.pick(topic) : s.pick(kSharedWords));
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace cme::synth

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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cme/common.hpp"
#include "cme/corpus.hpp"
#include "cme/imagetags.hpp"
#include "cme/text.hpp"

// Synthetic multiview corpus: class-biased text and emoji, class-specific
// interaction hubs, and profile-image tags, all drawn from one seed.

namespace cme::synth {

template <class T>
using PerClass = std::array<T, kNumClasses>;

struct SynthConfig {
  PerClass<std::size_t> users{200, 200, 200};

  // Text. A token is class-indicative with probability `*_signal`; an
  // indicative token comes from another class's pool with probability
  // `overlap`. Everything else is drawn from the shared pool.
  double tweets_per_user = 6.0;
  double words_per_tweet = 9.0;
  double words_per_description = 8.0;
  PerClass<double> tweet_signal{0.25, 0.25, 0.25};
  PerClass<double> description_signal{0.2, 0.2, 0.2};
  double overlap = 0.2;

  // Emoji per tweet / per description, and the chance an emoji is class-specific.
  PerClass<double> tweet_emoji_rate{0.8, 0.3, 0.6};
  PerClass<double> description_emoji_rate{0.4, 0.1, 0.3};
  double emoji_signal = 0.7;

  // Mean retweets and mentions per user. Retail values are invented.
  PerClass<double> retweet_mean{0.9, 11.08, 4.0};
  PerClass<double> mention_mean{0.09, 3.53, 1.2};
  std::size_t hubs_per_class = 40;
  /// Probability an interaction targets the user's own class hub pool.
  double network_affinity = 0.8;

  /// Probability an image tag comes from the class tag pool.
  double image_signal = 0.6;
  double tags_per_image = 4.0;

  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthOutput {
  corpus::LabeledDataset dataset;
  imagetags::FixtureTable image_tags;
};

SynthOutput generate(const SynthConfig& config);

/// Word pools the generator draws from, exposed for lexicon checks.
const std::vector<std::string>& class_words(ClassLabel c);
const std::vector<std::string>& shared_words();
const std::vector<std::string>& class_emoji(ClassLabel c);
const std::vector<std::string>& shared_emoji();

/// Sentences over two disjoint topic vocabularies plus shared filler; each
/// sentence sticks to one topic. Used to probe embedding quality.
struct TopicCorpus {
  std::vector<text::TokenSet> sentences;
  std::array<std::vector<std::string>, 2> topic_words;
};
TopicCorpus two_topic_corpus(std::size_t words_per_topic, std::size_t sentences,
                             std::size_t sentence_length, std::uint64_t seed);

}  // namespace cme::synth

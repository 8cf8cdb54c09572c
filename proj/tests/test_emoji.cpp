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
#include <map>
#include <random>

#include "cme/emoji.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cme;

namespace {

we::WEModel keyword_model() {
  return we::WEModel({"herb", "plant", "smile", "happy", "fire"},
                     {1, 0, 0, 0, 1, 0, 0, 0, 1, 0.5, 0.5, 0, 2, 2, 2}, 3);
}

emoji::EmojiLexicon lexicon() {
  emoji::EmojiLexicon lex;
  lex.add({"🌿", {"herb", "plant"}, {}});
  lex.add({"🙂", {"smile"}, {}});
  lex.add({"😀", {"happy", "smile"}, {}});
  lex.add({"☘️", {"herb"}, {}});
  lex.add({"🦄", {"unicorn"}, {}});  // keyword outside the model
  return lex;
}

}  // namespace

TEST(LookupSenses, Examples) {
  const auto lex = lexicon();
  EXPECT_EQ(emoji::lookup_senses("🌿", lex), (std::vector<std::string>{"herb", "plant"}));
  EXPECT_TRUE(emoji::lookup_senses("🚀", lex).empty());
  EXPECT_EQ(emoji::lookup_senses("🙂", lex), (std::vector<std::string>{"smile"}));
}

TEST(LookupSenses, IgnoresPresentationSelector) {
  const auto lex = lexicon();
  EXPECT_EQ(emoji::lookup_senses("☘", lex), (std::vector<std::string>{"herb"}));
  EXPECT_EQ(emoji::lookup_senses("☘️", lex), (std::vector<std::string>{"herb"}));
}

TEST(EmojiLexicon, RejectsEntryWithoutKeywords) {
  emoji::EmojiLexicon lex;
  EXPECT_THROW(lex.add({"🌿", {}, {}}), ValidationError);
}

TEST(EmojiLexicon, LoadsFile) {
  testing_support::TempDir dir;
  const auto p = dir.write("e.tsv", "# header\n🌿\tHerb, plant\tan herb|a plant\n🙂\tsmile\n");
  const auto lex = emoji::EmojiLexicon::load(p);
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(emoji::lookup_senses("🌿", lex), (std::vector<std::string>{"herb", "plant"}));
  ASSERT_NE(lex.find("🌿"), nullptr);
  EXPECT_EQ(lex.find("🌿")->senses.size(), 2u);
  EXPECT_THROW(emoji::EmojiLexicon::load(dir.write("bad.tsv", "🌿\n")), ParseError);
}

TEST(EmojiLexicon, ShippedLexiconLoads) {
  const auto lex = emoji::EmojiLexicon::load(std::filesystem::path(CME_TEST_DATA_DIR) /
                                             "emoji_senses.tsv");
  EXPECT_GT(lex.size(), 20u);
}

TEST(EmojiEmbedding, Examples) {
  const auto lex = lexicon();
  const auto m = keyword_model();
  EXPECT_EQ(*emoji::emoji_embedding({"🙂"}, lex, m), *m.vector("smile"));
  const auto both = *emoji::emoji_embedding({"🌿"}, lex, m);
  EXPECT_EQ(both, (std::vector<double>{0.5, 0.5, 0}));
  EXPECT_FALSE(emoji::emoji_embedding({}, lex, m));
  EXPECT_FALSE(emoji::emoji_embedding({"🦄", "🚀"}, lex, m));
}

TEST(EmojiEmbedding, MatchesKeywordMeanOracle) {
  const auto lex = lexicon();
  const auto m = keyword_model();
  std::map<std::string, std::vector<double>> table;
  for (const auto& w : m.words()) table[w] = *m.vector(w);
  const std::vector<std::string> list{"🌿", "😀", "🦄", "🌿", "☘"};
  std::vector<std::string> keywords;
  for (const auto& e : list)
    for (const auto& k : emoji::lookup_senses(e, lex)) keywords.push_back(k);
  const auto want = *oracle::mean_vector(keywords, table);
  const auto got = *emoji::emoji_embedding(list, lex, m);
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
}

TEST(EmojiEmbedding, DuplicationUnderBothSemantics) {
  const auto lex = lexicon();
  const auto m = keyword_model();
  const std::vector<std::string> once{"🌿", "😀"};
  const std::vector<std::string> twice{"🌿", "😀", "🌿", "😀"};
  for (auto rep : {emoji::Repetition::Multiset, emoji::Repetition::Set}) {
    const auto a = *emoji::emoji_embedding(once, lex, m, rep);
    const auto b = *emoji::emoji_embedding(twice, lex, m, rep);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
  }
  // Uneven repetition separates the two semantics.
  const std::vector<std::string> spam{"🌿", "🌿", "🌿", "🙂"};
  EXPECT_NE(*emoji::emoji_embedding(spam, lex, m, emoji::Repetition::Multiset),
            *emoji::emoji_embedding(spam, lex, m, emoji::Repetition::Set));
}

TEST(EmojiEmbedding, PermutationInvariantAndInsideHull) {
  const auto lex = lexicon();
  const auto m = keyword_model();
  std::vector<std::string> list{"🌿", "😀", "🙂", "☘️", "🦄", "🌿", "🙂"};
  const auto ref = *emoji::emoji_embedding(list, lex, m);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    std::shuffle(list.begin(), list.end(), rng);
    const auto got = *emoji::emoji_embedding(list, lex, m);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(got[k], ref[k], 1e-15);
  }
  // herb, plant, smile and happy all lie on the simplex x+y+z = 1, x,y,z >= 0.
  EXPECT_GE(*std::min_element(ref.begin(), ref.end()), 0.0);
  EXPECT_NEAR(ref[0] + ref[1] + ref[2], 1.0, 1e-15);
}

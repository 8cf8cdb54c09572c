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

#include "cme/corpus.hpp"
#include "support.hpp"

using namespace cme;
using namespace cme::corpus;
using testing_support::TempDir;

TEST(LoadUsers, EmptyFileGivesEmptyList) {
  TempDir dir;
  EXPECT_TRUE(load_users(dir.write("u.jsonl", "")).empty());
}

TEST(LoadUsers, KeepsFileOrder) {
  TempDir dir;
  auto p = dir.write("u.jsonl",
                     R"({"user_id":"3","name":"C","screen_name":"c","description":"x"})"
                     "\n"
                     R"({"user_id":"1","name":"A","screen_name":"a","description":"","profile_image":"img/a.jpg"})"
                     "\n"
                     R"({"user_id":"2","name":"B","screen_name":"b","description":"y"})"
                     "\n");
  auto users = load_users(p);
  ASSERT_EQ(users.size(), 3u);
  EXPECT_EQ(users[0].user_id, "3");
  EXPECT_EQ(users[1].user_id, "1");
  EXPECT_EQ(users[1].profile_image_ref, "img/a.jpg");
  EXPECT_FALSE(users[0].profile_image_ref);
  EXPECT_EQ(users[2].user_id, "2");
}

TEST(LoadUsers, MissingIdCitesLine) {
  TempDir dir;
  auto p = dir.write("u.jsonl",
                     R"({"user_id":"1","name":"A","screen_name":"a","description":""})"
                     "\n"
                     R"({"name":"B","screen_name":"b","description":""})"
                     "\n");
  try {
    load_users(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadUsers, UnreadableFileIsIoError) {
  EXPECT_THROW(load_users("/nonexistent/users.jsonl"), IoError);
}

TEST(LoadTweets, RetweetMarkerAndDuplicates) {
  TempDir dir;
  EXPECT_TRUE(load_tweets(dir.write("empty.jsonl", "")).empty());
  auto p = dir.write("t.jsonl",
                     R"({"tweet_id":"t1","author_id":"1","text":"RT @x: hi","retweet_of":"9"})"
                     "\n");
  auto tweets = load_tweets(p);
  ASSERT_EQ(tweets.size(), 1u);
  EXPECT_EQ(tweets[0].retweet_of, "9");
  auto dup = dir.write("d.jsonl",
                       R"({"tweet_id":"t1","author_id":"1","text":"a"})"
                       "\n"
                       R"({"tweet_id":"t1","author_id":"2","text":"b"})"
                       "\n");
  EXPECT_THROW(load_tweets(dup), ValidationError);
}

TEST(LoadInteractions, RepliesFoldIntoMentions) {
  TempDir dir;
  auto p = dir.write("i.tsv", "a\tb\treply\t2\na\tc\tretweet\t1\n");
  auto rows = load_interactions(p);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].kind, InteractionKind::Mention);
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_EQ(rows[1].kind, InteractionKind::Retweet);
  EXPECT_THROW(load_interactions(dir.write("bad.tsv", "a\tb\tfollow\t1\n")), ParseError);
  EXPECT_THROW(load_interactions(dir.write("zero.tsv", "a\tb\tmention\t0\n")), ParseError);
}

namespace {

UserRecord user(const std::string& id) { return {id, "N" + id, "s" + id, "", std::nullopt, std::nullopt}; }

}  // namespace

TEST(AssembleDataset, CountsLabels) {
  auto ds = assemble_dataset({user("a"), user("b"), user("c")}, {}, {},
                             {{"a", ClassLabel::Personal},
                              {"b", ClassLabel::InformedAgency},
                              {"c", ClassLabel::Retail}});
  EXPECT_EQ(ds.class_counts(), (ClassCounts{1, 1, 1}));
}

TEST(AssembleDataset, NoLabelsIsValid) {
  auto ds = assemble_dataset({user("a")}, {}, {}, {});
  EXPECT_EQ(ds.class_counts(), (ClassCounts{0, 0, 0}));
  EXPECT_TRUE(ds.labeled_users().empty());
}

TEST(AssembleDataset, LabelForAbsentUserFails) {
  EXPECT_THROW(assemble_dataset({user("a")}, {}, {}, {{"x9", ClassLabel::Retail}}), ValidationError);
}

TEST(AssembleDataset, GroupsTweetsAndKeepsBareTargets) {
  std::vector<TweetRecord> tweets{{"t1", "a", "x", std::nullopt},
                                  {"t2", "b", "y", std::nullopt},
                                  {"t3", "a", "z", std::nullopt}};
  std::vector<InteractionRecord> inter{{"a", "zz", InteractionKind::Mention, 1},
                                       {"b", "a", InteractionKind::Retweet, 2}};
  auto ds = assemble_dataset({user("a"), user("b")}, tweets, inter, {});
  EXPECT_EQ(ds.tweets_of("a").size(), 2u);
  EXPECT_EQ(ds.tweets_of("b").size(), 1u);
  EXPECT_TRUE(ds.tweets_of("nobody").empty());
  std::size_t total = 0;
  for (const auto& a : ds.authors()) total += ds.tweets_of(a).size();
  EXPECT_EQ(total, ds.tweet_count());
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(ds.bare_user_ids(), std::vector<UserId>{"zz"});
}

TEST(AssembleDataset, RoundTripsThroughFiles) {
  TempDir dir;
  auto u = user("a");
  u.description = "line with \"quotes\" and ünïcode 🌿";
  u.profile_image_ref = "img/a.jpg";
  std::vector<TweetRecord> tweets{{"t1", "a", "RT @b: hi", std::string("b")},
                                  {"t2", "b", "tab\there", std::nullopt}};
  std::vector<InteractionRecord> inter{{"a", "b", InteractionKind::Retweet, 3}};
  auto ds = assemble_dataset({u, user("b")}, tweets, inter,
                             {{"a", ClassLabel::Retail}, {"b", ClassLabel::Personal}});
  save_dataset(ds, dir.path());
  EXPECT_EQ(load_dataset(dir.path()), ds);
}

TEST(AssembleDataset, ClassCountsMatchRecount) {
  std::vector<UserRecord> users;
  std::map<UserId, ClassLabel> labels;
  for (int i = 0; i < 50; ++i) {
    users.push_back(user(std::to_string(i)));
    if (i % 7) labels[std::to_string(i)] = class_from_index(static_cast<std::size_t>(i) % 3);
  }
  auto ds = assemble_dataset(users, {}, {}, labels);
  ClassCounts recount{};
  for (const auto* u : ds.labeled_users()) ++recount[class_index(*u->label)];
  EXPECT_EQ(recount, ds.class_counts());
}

TEST(ClassLabels, ParseCodesAndNames) {
  EXPECT_EQ(parse_class("P"), ClassLabel::Personal);
  EXPECT_EQ(parse_class("informed agency"), std::nullopt);
  EXPECT_EQ(parse_class("I"), ClassLabel::InformedAgency);
  EXPECT_EQ(parse_class("r"), ClassLabel::Retail);
  EXPECT_EQ(parse_class("X"), std::nullopt);
}

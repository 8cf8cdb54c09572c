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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cme/common.hpp"

// Data model and ingestion. File layouts are documented in docs/schema.md.

namespace cme::corpus {

struct UserRecord {
  UserId user_id;
  std::string name;
  std::string screen_name;
  std::string description;
  std::optional<std::string> profile_image_ref;
  std::optional<ClassLabel> label;

  bool operator==(const UserRecord&) const = default;
};

struct TweetRecord {
  std::string tweet_id;
  UserId author_id;
  std::string raw_text;
  std::optional<UserId> retweet_of;

  bool operator==(const TweetRecord&) const = default;
};

enum class InteractionKind : std::uint8_t { Mention, Retweet };

std::string_view kind_name(InteractionKind k);

struct InteractionRecord {
  UserId source;
  UserId target;
  InteractionKind kind = InteractionKind::Mention;
  std::uint64_t count = 1;

  bool operator==(const InteractionRecord&) const = default;
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

/// Immutable after assembly.
class LabeledDataset {
 public:
  const std::vector<UserRecord>& users() const { return users_; }
  const std::vector<InteractionRecord>& interactions() const { return interactions_; }
  const ClassCounts& class_counts() const { return class_counts_; }

  /// Author ids in first-seen order, each with its tweets in input order.
  const std::vector<UserId>& authors() const { return authors_; }
  const std::vector<TweetRecord>& tweets_of(const UserId& author) const;
  std::size_t tweet_count() const;

  /// Users that appear only as interaction endpoints.
  const std::vector<UserId>& bare_user_ids() const { return bare_ids_; }

  const UserRecord* find_user(const UserId& id) const;
  std::vector<const UserRecord*> labeled_users() const;

  bool operator==(const LabeledDataset& other) const;

 private:
  friend LabeledDataset assemble_dataset(std::vector<UserRecord>, std::vector<TweetRecord>,
                                         std::vector<InteractionRecord>,
                                         const std::map<UserId, ClassLabel>&);

  std::vector<UserRecord> users_;
  std::unordered_map<UserId, std::size_t> user_index_;
  std::vector<UserId> authors_;
  std::unordered_map<UserId, std::vector<TweetRecord>> tweets_by_author_;
  std::vector<InteractionRecord> interactions_;
  std::vector<UserId> bare_ids_;
  ClassCounts class_counts_{};
};

// Loaders. Malformed records raise ParseError carrying the 1-based line number;
// unreadable files raise IoError.

std::vector<UserRecord> load_users(const std::filesystem::path& path);
std::vector<TweetRecord> load_tweets(const std::filesystem::path& path);
std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path);
std::map<UserId, ClassLabel> load_labels(const std::filesystem::path& path);

/// Groups tweets by author and recounts labels. Labels override any label
/// already present on a UserRecord. Throws ValidationError on duplicate user or
/// tweet ids, or a label for an unknown user.
LabeledDataset assemble_dataset(std::vector<UserRecord> users, std::vector<TweetRecord> tweets,
                                std::vector<InteractionRecord> interactions,
                                const std::map<UserId, ClassLabel>& labels);

/// Writes users.jsonl, tweets.jsonl, interactions.tsv and labels.tsv into `dir`.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir);
/// Inverse of save_dataset.
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace cme::corpus

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

#include "cme/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <unordered_set>

#include "cme/util.hpp"
#include "json.hpp"

namespace cme {

std::string_view class_code(ClassLabel c) {
  switch (c) {
    case ClassLabel::Personal: return "P";
    case ClassLabel::InformedAgency: return "I";
    case ClassLabel::Retail: return "R";
  }
  return "?";
}

std::string_view class_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::Personal: return "Personal";
    case ClassLabel::InformedAgency: return "InformedAgency";
    case ClassLabel::Retail: return "Retail";
  }
  return "?";
}

std::optional<ClassLabel> parse_class(std::string_view s) {
  const std::string lower = util::to_lower(s);
  for (ClassLabel c : kAllClasses) {
    if (lower == util::to_lower(class_code(c)) || lower == util::to_lower(class_name(c))) return c;
  }
  return std::nullopt;
}

}  // namespace cme

namespace cme::corpus {

using nlohmann::json;

namespace {

const std::vector<TweetRecord> kNoTweets;

std::string required_string(const json& j, const char* key, const std::string& src,
                            std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ParseError(src, line, std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->is_string() ? it->get<std::string>() : it->dump();
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty()) continue;
    fn(line, lineno);
  }
  if (in.bad()) throw IoError("read failed on " + path.string());
}

json parse_json_line(const std::string& line, const std::string& src, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(src, lineno, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(src, lineno, "record is not a JSON object");
  return j;
}

}  // namespace

std::string_view kind_name(InteractionKind k) {
  return k == InteractionKind::Mention ? "mention" : "retweet";
}

std::vector<UserRecord> load_users(const std::filesystem::path& path) {
  const std::string src = path.string();
  std::vector<UserRecord> out;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    json j = parse_json_line(line, src, lineno);
    UserRecord u;
    u.user_id = required_string(j, "user_id", src, lineno);
    if (u.user_id.empty()) throw ParseError(src, lineno, "empty user_id");
    u.name = optional_string(j, "name");
    u.screen_name = optional_string(j, "screen_name");
    u.description = optional_string(j, "description");
    if (auto img = optional_string(j, "profile_image"); !img.empty()) u.profile_image_ref = img;
    out.push_back(std::move(u));
  });
  return out;
}

std::vector<TweetRecord> load_tweets(const std::filesystem::path& path) {
  const std::string src = path.string();
  std::vector<TweetRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    json j = parse_json_line(line, src, lineno);
    TweetRecord t;
    t.tweet_id = required_string(j, "tweet_id", src, lineno);
    t.author_id = required_string(j, "author_id", src, lineno);
    if (t.tweet_id.empty() || t.author_id.empty())
      throw ParseError(src, lineno, "empty tweet_id or author_id");
    t.raw_text = optional_string(j, "text");
    if (auto rt = optional_string(j, "retweet_of"); !rt.empty()) t.retweet_of = rt;
    if (!seen.insert(t.tweet_id).second)
      throw ValidationError(src + ":" + std::to_string(lineno) + ": duplicate tweet_id '" +
                            t.tweet_id + "'");
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path) {
  const std::string src = path.string();
  std::vector<InteractionRecord> out;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    auto cols = util::split(line, '\t');
    if (cols.size() != 4) throw ParseError(src, lineno, "expected 4 tab-separated columns");
    InteractionRecord r;
    r.source = std::string(util::trim(cols[0]));
    r.target = std::string(util::trim(cols[1]));
    if (r.source.empty() || r.target.empty()) throw ParseError(src, lineno, "empty user id");
    const std::string kind = util::to_lower(util::trim(cols[2]));
    // Replies count as mentions.
    if (kind == "mention" || kind == "reply")
      r.kind = InteractionKind::Mention;
    else if (kind == "retweet")
      r.kind = InteractionKind::Retweet;
    else
      throw ParseError(src, lineno, "unknown interaction kind '" + kind + "'");
    const auto count_str = util::trim(cols[3]);
    auto [ptr, ec] = std::from_chars(count_str.data(), count_str.data() + count_str.size(), r.count);
    if (ec != std::errc{} || ptr != count_str.data() + count_str.size() || r.count < 1)
      throw ParseError(src, lineno, "count must be an integer >= 1");
    out.push_back(std::move(r));
  });
  return out;
}

std::map<UserId, ClassLabel> load_labels(const std::filesystem::path& path) {
  const std::string src = path.string();
  std::map<UserId, ClassLabel> out;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    auto cols = util::split(line, '\t');
    if (cols.size() != 2) throw ParseError(src, lineno, "expected user_id TAB label");
    auto label = parse_class(util::trim(cols[1]));
    if (!label) throw ParseError(src, lineno, "unknown label '" + std::string(cols[1]) + "'");
    const std::string id(util::trim(cols[0]));
    if (!out.emplace(id, *label).second)
      throw ParseError(src, lineno, "duplicate label for '" + id + "'");
  });
  return out;
}

LabeledDataset assemble_dataset(std::vector<UserRecord> users, std::vector<TweetRecord> tweets,
                                std::vector<InteractionRecord> interactions,
                                const std::map<UserId, ClassLabel>& labels) {
  LabeledDataset ds;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i].user_id.empty()) throw ValidationError("user with empty user_id");
    if (!ds.user_index_.emplace(users[i].user_id, i).second)
      throw ValidationError("duplicate user_id '" + users[i].user_id + "'");
  }
  for (const auto& [id, label] : labels) {
    auto it = ds.user_index_.find(id);
    if (it == ds.user_index_.end())
      throw ValidationError("label for unknown user '" + id + "'");
    users[it->second].label = label;
  }
  for (const auto& u : users)
    if (u.label) ++ds.class_counts_[class_index(*u.label)];
  ds.users_ = std::move(users);

  std::unordered_set<std::string> tweet_ids;
  for (auto& t : tweets) {
    if (!tweet_ids.insert(t.tweet_id).second)
      throw ValidationError("duplicate tweet_id '" + t.tweet_id + "'");
    auto [it, fresh] = ds.tweets_by_author_.try_emplace(t.author_id);
    if (fresh) ds.authors_.push_back(t.author_id);
    it->second.push_back(std::move(t));
  }

  std::set<UserId> bare;
  for (const auto& r : interactions) {
    if (r.count < 1) throw ValidationError("interaction count must be >= 1");
    for (const auto* id : {&r.source, &r.target})
      if (!ds.user_index_.count(*id)) bare.insert(*id);
  }
  ds.bare_ids_.assign(bare.begin(), bare.end());
  ds.interactions_ = std::move(interactions);
  return ds;
}

const std::vector<TweetRecord>& LabeledDataset::tweets_of(const UserId& author) const {
  auto it = tweets_by_author_.find(author);
  return it == tweets_by_author_.end() ? kNoTweets : it->second;
}

std::size_t LabeledDataset::tweet_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : tweets_by_author_) n += v.size();
  return n;
}

const UserRecord* LabeledDataset::find_user(const UserId& id) const {
  auto it = user_index_.find(id);
  return it == user_index_.end() ? nullptr : &users_[it->second];
}

std::vector<const UserRecord*> LabeledDataset::labeled_users() const {
  std::vector<const UserRecord*> out;
  for (const auto& u : users_)
    if (u.label) out.push_back(&u);
  return out;
}

bool LabeledDataset::operator==(const LabeledDataset& o) const {
  if (users_ != o.users_ || authors_ != o.authors_ || interactions_ != o.interactions_ ||
      class_counts_ != o.class_counts_ || bare_ids_ != o.bare_ids_)
    return false;
  for (const auto& a : authors_)
    if (tweets_of(a) != o.tweets_of(a)) return false;
  return true;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  util::AtomicWriter users(dir / "users.jsonl");
  util::AtomicWriter labels(dir / "labels.tsv");
  for (const auto& u : ds.users()) {
    json j{{"user_id", u.user_id},
           {"name", u.name},
           {"screen_name", u.screen_name},
           {"description", u.description}};
    if (u.profile_image_ref) j["profile_image"] = *u.profile_image_ref;
    users.stream() << j.dump() << '\n';
    if (u.label) labels.stream() << u.user_id << '\t' << class_code(*u.label) << '\n';
  }
  users.commit();
  labels.commit();

  util::AtomicWriter tweets(dir / "tweets.jsonl");
  for (const auto& a : ds.authors()) {
    for (const auto& t : ds.tweets_of(a)) {
      json j{{"tweet_id", t.tweet_id}, {"author_id", t.author_id}, {"text", t.raw_text}};
      if (t.retweet_of) j["retweet_of"] = *t.retweet_of;
      tweets.stream() << j.dump() << '\n';
    }
  }
  tweets.commit();

  util::AtomicWriter inter(dir / "interactions.tsv");
  for (const auto& r : ds.interactions())
    inter.stream() << r.source << '\t' << r.target << '\t' << kind_name(r.kind) << '\t' << r.count
                   << '\n';
  inter.commit();
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  auto users = load_users(dir / "users.jsonl");
  auto tweets = load_tweets(dir / "tweets.jsonl");
  auto inter = std::filesystem::exists(dir / "interactions.tsv")
                   ? load_interactions(dir / "interactions.tsv")
                   : std::vector<InteractionRecord>{};
  auto labels = std::filesystem::exists(dir / "labels.tsv") ? load_labels(dir / "labels.tsv")
                                                            : std::map<UserId, ClassLabel>{};
  return assemble_dataset(std::move(users), std::move(tweets), std::move(inter), labels);
}

}  // namespace cme::corpus

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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cme::text {

struct ContactInfo {
  std::vector<std::string> phones;
  std::vector<std::string> emails;
  std::vector<std::string> web_addresses;

  bool empty() const { return phones.empty() && emails.empty() && web_addresses.empty(); }
  bool operator==(const ContactInfo&) const = default;
};

struct ExtractedEntities {
  std::vector<std::string> urls;
  std::vector<std::string> mentions;  // screen names without '@'
  std::optional<std::string> retweet_source;
  std::vector<std::string> emoji;  // UTF-8 encoded emoji sequences
  ContactInfo contacts;

  bool empty() const {
    return urls.empty() && mentions.empty() && !retweet_source && emoji.empty() &&
           contacts.empty();
  }
  bool operator==(const ExtractedEntities&) const = default;
};

struct Extraction {
  ExtractedEntities entities;
  std::string residual;  // whitespace-collapsed text with every extracted span removed
};

/// Ordered lowercase lemma list for one text unit.
using TokenSet = std::vector<std::string>;

using WordSet = std::unordered_set<std::string>;
using LemmaTable = std::unordered_map<std::string, std::string>;

enum class HashtagPolicy { KeepBody, Drop };

/// Pulls out, in order: a leading "RT @name" marker, scheme-prefixed URLs,
/// emails, @-mentions, bare web addresses, phone numbers and emoji.
Extraction extract_entities(std::string_view raw_text);

/// Lowercases, splits on whitespace and punctuation, and drops stopwords,
/// punctuation-only tokens and any token containing a digit.
TokenSet clean_tokens(std::string_view residual_text, const WordSet& stopwords,
                      HashtagPolicy hashtags = HashtagPolicy::KeepBody);

TokenSet lemmatize(const TokenSet& tokens, const LemmaTable& table);

/// True iff some whitespace-separated component of `name`, case-folded and
/// stripped of surrounding punctuation, is in `lexicon`.
bool match_person_name(std::string_view name, const WordSet& lexicon);

/// extract -> clean -> lemmatize.
struct Pipeline {
  WordSet stopwords;
  LemmaTable lemmas;
  HashtagPolicy hashtags = HashtagPolicy::KeepBody;

  struct Result {
    ExtractedEntities entities;
    TokenSet tokens;
  };
  Result run(std::string_view raw_text) const;
};

WordSet load_word_set(const std::filesystem::path& path);
LemmaTable load_lemma_table(const std::filesystem::path& path);

// UTF-8 helpers shared with the emoji module.

/// Decodes one code point at `pos`, advancing it. Invalid bytes decode as
/// U+FFFD and consume one byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

bool is_emoji_base(char32_t cp);

/// Splits out emoji sequences (ZWJ joins, modifiers, flags and keycaps kept as
/// single units). Non-emoji text is returned with each emoji replaced by a space.
std::vector<std::string> scan_emoji(std::string_view s, std::string* remainder = nullptr);

}  // namespace cme::text

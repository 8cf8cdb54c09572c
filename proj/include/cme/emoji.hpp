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
#include <map>
#include <string>
#include <vector>

#include "cme/common.hpp"
#include "cme/we.hpp"

namespace cme::emoji {

struct EmojiSenseEntry {
  std::string emoji;
  std::vector<std::string> keywords;  // never empty
  std::vector<std::string> senses;
};

/// Emoji -> sense keywords. Lookups ignore U+FE0F presentation selectors, so
/// "☘️" and "☘" resolve to the same entry.
class EmojiLexicon {
 public:
  void add(EmojiSenseEntry entry);
  const EmojiSenseEntry* find(const std::string& emoji) const;
  std::size_t size() const { return entries_.size(); }

  /// `emoji TAB keyword,keyword,... [TAB sense gloss|sense gloss]`
  static EmojiLexicon load(const std::filesystem::path& path);

 private:
  std::map<std::string, EmojiSenseEntry> entries_;
};

/// Keywords for `emoji`, or an empty list when it is not in the lexicon.
std::vector<std::string> lookup_senses(const std::string& emoji, const EmojiLexicon& lexicon);

enum class Repetition { Multiset, Set };

/// Mean background-model vector over every in-vocabulary keyword of every
/// emoji in the list. Empty-view sentinel when nothing resolves.
ViewValue emoji_embedding(const std::vector<std::string>& emoji_list, const EmojiLexicon& lexicon,
                          const we::WEModel& background_model,
                          Repetition repetition = Repetition::Multiset);

}  // namespace cme::emoji

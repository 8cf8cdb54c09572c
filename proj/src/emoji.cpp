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

#include "cme/emoji.hpp"

#include <fstream>
#include <set>

#include "cme/util.hpp"

namespace cme::emoji {

namespace {

std::string strip_presentation(const std::string& s) {
  static const std::string kVs16 = "\xEF\xB8\x8F";
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s.compare(i, kVs16.size(), kVs16) == 0) {
      i += kVs16.size();
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  for (auto part : util::split(s, sep)) {
    auto t = util::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

void EmojiLexicon::add(EmojiSenseEntry entry) {
  if (entry.keywords.empty())
    throw ValidationError("emoji entry '" + entry.emoji + "' has no keywords");
  auto key = strip_presentation(entry.emoji);
  entries_.insert_or_assign(std::move(key), std::move(entry));
}

const EmojiSenseEntry* EmojiLexicon::find(const std::string& emoji) const {
  auto it = entries_.find(strip_presentation(emoji));
  return it == entries_.end() ? nullptr : &it->second;
}

EmojiLexicon EmojiLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  EmojiLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty() || line.front() == '#') continue;
    auto cols = util::split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(path.string(), lineno, "expected emoji TAB keywords [TAB senses]");
    EmojiSenseEntry e;
    e.emoji = std::string(util::trim(cols[0]));
    for (auto& k : split_list(cols[1], ',')) e.keywords.push_back(util::to_lower(k));
    if (cols.size() == 3) e.senses = split_list(cols[2], '|');
    if (e.emoji.empty() || e.keywords.empty())
      throw ParseError(path.string(), lineno, "entry needs an emoji and at least one keyword");
    lex.add(std::move(e));
  }
  return lex;
}

std::vector<std::string> lookup_senses(const std::string& emoji, const EmojiLexicon& lexicon) {
  const auto* e = lexicon.find(emoji);
  return e ? e->keywords : std::vector<std::string>{};
}

ViewValue emoji_embedding(const std::vector<std::string>& emoji_list, const EmojiLexicon& lexicon,
                          const we::WEModel& background_model, Repetition repetition) {
  text::TokenSet keywords;
  std::set<std::string> seen;
  for (const auto& e : emoji_list) {
    if (repetition == Repetition::Set && !seen.insert(strip_presentation(e)).second) continue;
    for (auto& k : lookup_senses(e, lexicon)) keywords.push_back(std::move(k));
  }
  return we::view_embedding(keywords, background_model);
}

}  // namespace cme::emoji

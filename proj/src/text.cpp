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

#include "cme/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "cme/common.hpp"
#include "cme/util.hpp"

namespace cme::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr char32_t kZwj = 0x200D;
constexpr char32_t kKeycap = 0x20E3;

struct Range {
  char32_t lo, hi;
};

// Code points that start an emoji presentation sequence.
constexpr std::array<Range, 40> kEmojiRanges{{
    {0x00A9, 0x00A9},   {0x00AE, 0x00AE},   {0x203C, 0x203C},   {0x2049, 0x2049},
    {0x2122, 0x2122},   {0x2139, 0x2139},   {0x2194, 0x2199},   {0x21A9, 0x21AA},
    {0x231A, 0x231B},   {0x2328, 0x2328},   {0x23CF, 0x23CF},   {0x23E9, 0x23F3},
    {0x23F8, 0x23FA},   {0x24C2, 0x24C2},   {0x25AA, 0x25AB},   {0x25B6, 0x25B6},
    {0x25C0, 0x25C0},   {0x25FB, 0x25FE},   {0x2600, 0x27BF},   {0x2934, 0x2935},
    {0x2B05, 0x2B07},   {0x2B1B, 0x2B1C},   {0x2B50, 0x2B50},   {0x2B55, 0x2B55},
    {0x3030, 0x3030},   {0x303D, 0x303D},   {0x3297, 0x3297},   {0x3299, 0x3299},
    {0x1F004, 0x1F004}, {0x1F0CF, 0x1F0CF}, {0x1F170, 0x1F171}, {0x1F17E, 0x1F17F},
    {0x1F18E, 0x1F18E}, {0x1F191, 0x1F19A}, {0x1F1E6, 0x1F1FF}, {0x1F201, 0x1F251},
    {0x1F300, 0x1F3FA}, {0x1F400, 0x1F64F}, {0x1F680, 0x1F6FF}, {0x1F700, 0x1FAFF},
}};

bool in_ranges(char32_t cp) {
  return std::any_of(kEmojiRanges.begin(), kEmojiRanges.end(),
                     [cp](const Range& r) { return cp >= r.lo && cp <= r.hi; });
}

bool is_skin_tone(char32_t cp) { return cp >= 0x1F3FB && cp <= 0x1F3FF; }
bool is_variation_selector(char32_t cp) { return cp == 0xFE0E || cp == 0xFE0F; }
bool is_tag(char32_t cp) { return cp >= 0xE0020 && cp <= 0xE007F; }
bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }
bool is_keycap_base(char32_t cp) { return (cp >= '0' && cp <= '9') || cp == '#' || cp == '*'; }

bool is_unicode_punct(char32_t cp) {
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x2190 && cp <= 0x2BFF) ||
         (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE00 && cp <= 0xFE0F) ||
         (cp >= 0xFF00 && cp <= 0xFF0F) || cp == 0x00A0 || cp == 0x00AB || cp == 0x00BB ||
         cp == 0x00BF || cp == 0x00A1 || cp == kReplacement || is_tag(cp);
}

std::string collapse_ws(std::string_view s) { return util::join(util::split_whitespace(s), " "); }

// Replaces every match of `re` in `text` by a space, collecting capture `group`.
void strip_matches(std::string& text, const std::regex& re, int group, int remove_group,
                   std::vector<std::string>& out) {
  std::string result;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator();
       ++it) {
    const auto& m = *it;
    const auto pos = static_cast<std::size_t>(m.position(remove_group));
    result.append(text, last, pos - last);
    result.push_back(' ');
    last = pos + static_cast<std::size_t>(m.length(remove_group));
    out.push_back(m.str(group));
  }
  result.append(text, last, std::string::npos);
  text = std::move(result);
}

const std::regex& retweet_re() {
  static const std::regex re(R"(^\s*RT\s+@([A-Za-z0-9_]{1,15}):?)");
  return re;
}
const std::regex& url_re() {
  static const std::regex re(R"([A-Za-z][A-Za-z0-9+.\-]*://[^\s]+)");
  return re;
}
const std::regex& email_re() {
  static const std::regex re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  return re;
}
const std::regex& mention_re() {
  static const std::regex re(R"((?:^|[^A-Za-z0-9_])(@([A-Za-z0-9_]{1,15})))");
  return re;
}
const std::regex& web_re() {
  static const std::regex re(
      R"((?:^|[^A-Za-z0-9_@./\-])((?:www\.[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)+|[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.(?:com|org|net|co|io|biz|info|us|ca|shop|store|gov|edu))(?:/[^\s]*)?)(?![A-Za-z0-9\-]))",
      std::regex::icase);
  return re;
}
const std::regex& phone_re() {
  static const std::regex re(
      R"((?:^|[^0-9])((?:\+?[0-9]{1,2}[ .\-]?)?(?:\([0-9]{3}\)|[0-9]{3})[ .\-]?[0-9]{3}[ .\-]?[0-9]{4})(?![0-9]))");
  return re;
}

}  // namespace

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_emoji_base(char32_t cp) { return in_ranges(cp); }

std::vector<std::string> scan_emoji(std::string_view s, std::string* remainder) {
  std::vector<std::string> found;
  std::string rest;
  std::size_t pos = 0;
  auto peek = [&](std::size_t at) -> std::pair<char32_t, std::size_t> {
    if (at >= s.size()) return {0, at};
    std::size_t p = at;
    char32_t cp = decode_utf8(s, p);
    return {cp, p};
  };

  while (pos < s.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode_utf8(s, pos);

    if (is_keycap_base(cp)) {
      auto [c1, p1] = peek(pos);
      std::size_t end = 0;
      if (c1 == kKeycap) {
        end = p1;
      } else if (c1 == 0xFE0F) {
        auto [c2, p2] = peek(p1);
        if (c2 == kKeycap) end = p2;
      }
      if (end) {
        found.emplace_back(s.substr(start, end - start));
        rest.push_back(' ');
        pos = end;
        continue;
      }
      rest.append(s.substr(start, pos - start));
      continue;
    }

    if (!is_emoji_base(cp)) {
      // Stray modifiers and joiners are dropped.
      if (is_variation_selector(cp) || cp == kZwj || is_skin_tone(cp) || is_tag(cp)) continue;
      rest.append(s.substr(start, pos - start));
      continue;
    }

    if (is_regional_indicator(cp)) {
      auto [c1, p1] = peek(pos);
      if (is_regional_indicator(c1)) pos = p1;
    } else {
      while (pos < s.size()) {
        auto [c1, p1] = peek(pos);
        if (is_variation_selector(c1) || is_skin_tone(c1) || is_tag(c1)) {
          pos = p1;
        } else if (c1 == kZwj) {
          auto [c2, p2] = peek(p1);
          if (!is_emoji_base(c2)) break;
          pos = p2;
        } else {
          break;
        }
      }
    }
    found.emplace_back(s.substr(start, pos - start));
    rest.push_back(' ');
  }
  if (remainder) *remainder = std::move(rest);
  return found;
}

Extraction extract_entities(std::string_view raw_text) {
  Extraction ex;
  auto& ent = ex.entities;
  std::string text(raw_text);

  std::smatch m;
  if (std::regex_search(text, m, retweet_re())) {
    ent.retweet_source = m.str(1);
    text.replace(static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)),
                 " ");
  }

  // Removing one kind of span can expose another (e.g. "x.com@foo"), so
  // repeat until nothing more is found.
  for (int pass = 0; pass < 8; ++pass) {
    const std::string before = text;
    strip_matches(text, url_re(), 0, 0, ent.urls);
    strip_matches(text, email_re(), 0, 0, ent.contacts.emails);
    strip_matches(text, mention_re(), 2, 1, ent.mentions);
    strip_matches(text, web_re(), 1, 1, ent.contacts.web_addresses);
    strip_matches(text, phone_re(), 1, 1, ent.contacts.phones);
    std::string rest;
    auto emo = scan_emoji(text, &rest);
    ent.emoji.insert(ent.emoji.end(), emo.begin(), emo.end());
    text = std::move(rest);
    if (text == before) break;
  }
  ex.residual = collapse_ws(text);
  return ex;
}

TokenSet clean_tokens(std::string_view residual_text, const WordSet& stopwords,
                      HashtagPolicy hashtags) {
  TokenSet out;
  std::string cur;
  bool skipping = false;

  auto flush = [&] {
    if (!cur.empty() && !skipping) {
      const bool has_digit =
          std::any_of(cur.begin(), cur.end(), [](char c) { return c >= '0' && c <= '9'; });
      if (!has_digit && !stopwords.count(cur)) out.push_back(cur);
    }
    cur.clear();
    skipping = false;
  };

  std::size_t pos = 0;
  while (pos < residual_text.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode_utf8(residual_text, pos);
    if (cp == '\'' || cp == 0x2019) continue;  // "don't" -> "dont"
    if (cp < 0x80) {
      const auto c = static_cast<unsigned char>(cp);
      if (std::isalnum(c)) {
        cur.push_back(static_cast<char>(std::tolower(c)));
        continue;
      }
      const bool word_start = cur.empty();
      flush();
      if (c == '#' && word_start && hashtags == HashtagPolicy::Drop) skipping = true;
      continue;
    }
    if (is_unicode_punct(cp) || is_emoji_base(cp)) {
      flush();
      continue;
    }
    cur.append(residual_text.substr(start, pos - start));
  }
  flush();
  return out;
}

TokenSet lemmatize(const TokenSet& tokens, const LemmaTable& table) {
  TokenSet out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = table.find(t);
    out.push_back(it == table.end() ? t : it->second);
  }
  return out;
}

bool match_person_name(std::string_view name, const WordSet& lexicon) {
  for (const auto& part : util::split_whitespace(name)) {
    std::string_view p = part;
    auto ispunct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (!p.empty() && ispunct(p.front())) p.remove_prefix(1);
    while (!p.empty() && ispunct(p.back())) p.remove_suffix(1);
    if (!p.empty() && lexicon.count(util::to_lower(p))) return true;
  }
  return false;
}

Pipeline::Result Pipeline::run(std::string_view raw_text) const {
  auto ex = extract_entities(raw_text);
  return {std::move(ex.entities), lemmatize(clean_tokens(ex.residual, stopwords, hashtags), lemmas)};
}

WordSet load_word_set(const std::filesystem::path& path) {
  WordSet out;
  for (auto& line : util::read_lines(path)) out.insert(util::to_lower(line));
  return out;
}

LemmaTable load_lemma_table(const std::filesystem::path& path) {
  LemmaTable out;
  std::size_t lineno = 0;
  for (auto& line : util::read_lines(path)) {
    ++lineno;
    auto cols = util::split(line, '\t');
    if (cols.size() != 2) throw ParseError(path.string(), lineno, "expected token TAB lemma");
    out[util::to_lower(util::trim(cols[0]))] = util::to_lower(util::trim(cols[1]));
  }
  return out;
}

}  // namespace cme::text

// Copyright 2026 The kgembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <locale>
#include <optional>
#include <string>
#include <string_view>

#include "kgembed/error.hpp"

namespace kgembed {

namespace utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes one code point starting at `pos` and advances `pos`. Invalid bytes
/// decode to U+FFFD and consume a single byte.
inline char32_t decode(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i <= extra; ++i) {
    if ((byte(pos + i) & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (byte(pos + i) & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

inline void append(std::string& out, char32_t cp) {
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

/// Number of code points in `s`.
inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) decode(s, pos);
  return n;
}

/// `s` without its last code point.
inline std::string_view drop_last(std::string_view s) {
  if (s.empty()) return s;
  std::size_t end = s.size() - 1;
  while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
  return s.substr(0, end);
}

}  // namespace utf8

namespace detail {

inline const std::ctype<wchar_t>* utf8_ctype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        static const std::locale loc(name);
        return &std::use_facet<std::ctype<wchar_t>>(loc);
      } catch (const std::runtime_error&) {
      }
    }
    return nullptr;
  }();
  return facet;
}

inline bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' ||
         cp == U'\f' || cp == 0x00A0 || cp == 0x3000;
}

}  // namespace detail

/// Unicode lowercase of a UTF-8 string. Falls back to ASCII folding when no
/// UTF-8 locale is installed.
inline std::string fold_case(std::string_view s) {
  const auto* ctype = detail::utf8_ctype();
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    char32_t cp = utf8::decode(s, pos);
    if (cp < 0x80) {
      if (cp >= U'A' && cp <= U'Z') cp += 32;
    } else if (ctype != nullptr && sizeof(wchar_t) >= 4) {
      cp = static_cast<char32_t>(ctype->tolower(static_cast<wchar_t>(cp)));
    }
    utf8::append(out, cp);
  }
  return out;
}

/// Lowercases and joins whitespace-separated words with underscores.
inline std::string normalize_text(std::string_view s) {
  const std::string folded = fold_case(s);
  std::string out;
  out.reserve(folded.size());
  bool pending_gap = false;
  for (std::size_t pos = 0; pos < folded.size();) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(folded, pos);
    if (detail::is_space(cp)) {
      pending_gap = !out.empty();
      continue;
    }
    if (pending_gap) out.push_back('_');
    pending_gap = false;
    out.append(folded, start, pos - start);
  }
  return out;
}

/// A language-tagged word or phrase. Terms produced by `make_term` and
/// `parse_term` are normalized; raw tokens read from embedding files keep
/// their original spelling until standardization.
struct Term {
  std::string lang;
  std::string text;

  friend auto operator<=>(const Term&, const Term&) = default;
  friend bool operator==(const Term&, const Term&) = default;

  /// "lang:text"
  std::string str() const { return lang + ":" + text; }

  /// Number of underscore-separated words.
  std::size_t word_count() const {
    if (text.empty()) return 0;
    std::size_t n = 1;
    for (char c : text) n += (c == '_');
    return n;
  }
};

inline bool valid_lang(std::string_view lang) {
  if (lang.size() < 2 || lang.size() > 3) return false;
  for (char c : lang) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

/// Builds a normalized term; throws ArgumentError when the result would
/// violate the term invariants.
inline Term make_term(std::string_view lang, std::string_view text) {
  Term t{fold_case(lang), normalize_text(text)};
  if (!valid_lang(t.lang)) throw ArgumentError("invalid language code '" + std::string(lang) + "'");
  if (t.text.empty()) throw ArgumentError("empty term text for language '" + t.lang + "'");
  return t;
}

/// Parses "lang:text" (split at the first colon) into a normalized term.
inline std::optional<Term> try_parse_term(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  try {
    return make_term(token.substr(0, colon), token.substr(colon + 1));
  } catch (const ArgumentError&) {
    return std::nullopt;
  }
}

inline Term parse_term(std::string_view token) {
  auto t = try_parse_term(token);
  if (!t) throw ArgumentError("malformed term '" + std::string(token) + "', expected lang:text");
  return *std::move(t);
}

}  // namespace kgembed

template <>
struct std::hash<kgembed::Term> {
  std::size_t operator()(const kgembed::Term& t) const noexcept {
    const std::size_t h1 = std::hash<std::string>{}(t.lang);
    const std::size_t h2 = std::hash<std::string>{}(t.text);
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
  }
};

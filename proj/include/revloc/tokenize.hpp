// Copyright 2026 The revloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace revloc {

namespace detail {

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits one underscore-free word at case boundaries: "getFileName" ->
// get/File/Name, "parseURLString" -> parse/URL/String, "utf8Decode" -> utf8/Decode.
inline std::vector<std::string_view> split_camel(std::string_view word) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
  auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 1; i < word.size(); ++i) {
    const char prev = word[i - 1];
    const char cur = word[i];
    bool boundary = false;
    if (is_upper(cur) && (is_lower(prev) || is_digit(prev))) boundary = true;
    if (is_upper(prev) && is_upper(cur) && i + 1 < word.size() && is_lower(word[i + 1])) {
      boundary = true;
    }
    if (boundary) {
      parts.push_back(word.substr(start, i - start));
      start = i;
    }
  }
  if (start < word.size()) parts.push_back(word.substr(start));
  return parts;
}

}  // namespace detail

/// Splits text into lowercase tokens.
///
/// Words are maximal runs of [A-Za-z0-9_]. A compound word (snake_case or
/// camelCase) is emitted first as a whole and then as its parts. Tokens
/// shorter than two characters are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  auto emit = [&tokens](std::string_view t) {
    if (t.size() >= 2) tokens.push_back(detail::to_lower(t));
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && detail::is_word_char(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    i = j;

    const auto first = word.find_first_not_of('_');
    if (first == std::string_view::npos) continue;
    word = word.substr(first, word.find_last_not_of('_') - first + 1);

    std::vector<std::string_view> parts;
    std::size_t p = 0;
    while (p <= word.size()) {
      std::size_t q = word.find('_', p);
      if (q == std::string_view::npos) q = word.size();
      if (q > p) {
        for (auto piece : detail::split_camel(word.substr(p, q - p))) parts.push_back(piece);
      }
      p = q + 1;
    }
    emit(word);
    if (parts.size() > 1) {
      for (auto piece : parts) emit(piece);
    }
  }
  return tokens;
}

/// Joins tokens with single spaces.
inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace revloc

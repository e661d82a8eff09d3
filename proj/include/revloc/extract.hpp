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

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"
#include "revloc/tokenize.hpp"

// Lightweight method extractor for Java-like sources. It understands comments,
// string and character literals, and brace/paren nesting; nothing else.

namespace revloc {

namespace detail {

enum class ByteClass : unsigned char { kCode, kComment, kString };

struct CommentSpan {
  std::size_t begin = 0;  // first byte of the comment marker
  std::size_t end = 0;    // one past the last byte
  bool line = false;
};

struct LexedSource {
  std::vector<ByteClass> cls;
  std::vector<CommentSpan> comments;
};

inline LexedSource lex_source(std::string_view text, const std::string& path) {
  LexedSource lx;
  lx.cls.assign(text.size(), ByteClass::kCode);
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const char next = i + 1 < text.size() ? text[i + 1] : '\0';
    if (c == '/' && next == '/') {
      std::size_t j = text.find('\n', i);
      if (j == std::string_view::npos) j = text.size();
      std::fill(lx.cls.begin() + i, lx.cls.begin() + j, ByteClass::kComment);
      lx.comments.push_back({i, j, true});
      i = j;
    } else if (c == '/' && next == '*') {
      std::size_t j = text.find("*/", i + 2);
      if (j == std::string_view::npos) {
        throw MalformedSourceError(path + ": unterminated comment at byte " + std::to_string(i));
      }
      j += 2;
      std::fill(lx.cls.begin() + i, lx.cls.begin() + j, ByteClass::kComment);
      lx.comments.push_back({i, j, false});
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != c && text[j] != '\n') {
        j += text[j] == '\\' ? 2 : 1;
      }
      j = std::min(j + 1, text.size());
      std::fill(lx.cls.begin() + i, lx.cls.begin() + j, ByteClass::kString);
      i = j;
    } else {
      ++i;
    }
  }
  return lx;
}

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '$';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '$';
}

inline bool is_call_keyword(std::string_view w) {
  static constexpr std::array<std::string_view, 16> kKeywords = {
      "if", "for", "while", "switch", "catch", "synchronized", "try", "do",
      "else", "return", "new", "super", "this", "throw", "sizeof", "assert"};
  return std::find(kKeywords.begin(), kKeywords.end(), w) != kKeywords.end();
}

// Whitespace-normalized parameter list: spaces survive only between two
// identifier characters.
inline std::string collapse_ws(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty() && is_ident_char(out.back()) && is_ident_char(c)) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

struct SourceView {
  std::string_view text;
  const LexedSource& lx;

  bool code(std::size_t i) const { return lx.cls[i] == ByteClass::kCode; }
  bool space(std::size_t i) const {
    return std::isspace(static_cast<unsigned char>(text[i])) != 0;
  }

  // Index of the last code, non-space byte strictly before `i`, or npos.
  std::size_t prev_code(std::size_t i) const {
    while (i > 0) {
      --i;
      if (code(i) && !space(i)) return i;
    }
    return std::string_view::npos;
  }

  std::size_t next_code(std::size_t i) const {
    for (; i < text.size(); ++i)
      if (code(i) && !space(i)) return i;
    return std::string_view::npos;
  }

  // Identifier ending at `last` (inclusive); returns its first index.
  std::size_t ident_begin(std::size_t last) const {
    std::size_t b = last;
    while (b > 0 && code(b - 1) && is_ident_char(text[b - 1])) --b;
    return b;
  }

  // Copy of [b, e) with comments blanked out.
  std::string code_text(std::size_t b, std::size_t e) const {
    std::string out(text.substr(b, e - b));
    for (std::size_t i = b; i < e; ++i)
      if (lx.cls[i] == ByteClass::kComment) out[i - b] = ' ';
    return out;
  }
};

inline std::string strip_comment_markers(std::string_view c) {
  std::string out(c);
  for (char& ch : out)
    if (ch == '/' || ch == '*') ch = ' ';
  return out;
}

}  // namespace detail

/// Extracts one MethodRecord per method body found in `file`.
///
/// A method body is a `{` preceded by a parameter list `name(...)` (optionally
/// followed by a `throws` clause) that does not sit inside another method
/// body. Unbalanced braces raise MalformedSourceError with the byte offset.
inline std::vector<MethodRecord> extract_methods(const SourceFile& file) {
  using detail::ByteClass;
  const std::string_view text = file.content;
  const detail::LexedSource lx = detail::lex_source(text, file.path);
  const detail::SourceView sv{text, lx};

  // Brace and paren matching over code bytes.
  std::vector<std::size_t> brace_close(text.size(), std::string_view::npos);
  std::vector<std::size_t> paren_open(text.size(), std::string_view::npos);
  {
    std::vector<std::size_t> braces;
    std::vector<std::size_t> parens;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (!sv.code(i)) continue;
      switch (text[i]) {
        case '{': braces.push_back(i); break;
        case '}':
          if (braces.empty()) {
            throw MalformedSourceError(file.path + ": unbalanced '}' at byte " + std::to_string(i));
          }
          brace_close[braces.back()] = i;
          braces.pop_back();
          break;
        case '(': parens.push_back(i); break;
        case ')':
          if (!parens.empty()) {
            paren_open[i] = parens.back();
            parens.pop_back();
          }
          break;
        default: break;
      }
    }
    if (!braces.empty()) {
      throw MalformedSourceError(file.path + ": unclosed '{' at byte " +
                                 std::to_string(braces.back()));
    }
  }

  std::vector<MethodRecord> methods;
  std::size_t body_end = 0;  // methods inside an open body are not separate methods
  bool in_body = false;
  for (std::size_t p = 0; p < text.size(); ++p) {
    if (in_body && p <= body_end) continue;
    in_body = false;
    if (!sv.code(p) || text[p] != '{') continue;

    std::size_t q = sv.prev_code(p);
    if (q == std::string_view::npos) continue;
    // Skip a trailing `throws A, B` or `const` clause.
    if (detail::is_ident_char(text[q])) {
      std::size_t k = q;
      bool found = false;
      while (k != std::string_view::npos) {
        if (detail::is_ident_char(text[k])) {
          const std::size_t b = sv.ident_begin(k);
          const std::string_view word = text.substr(b, k - b + 1);
          if (word == "throws" || word == "const") {
            found = true;
            k = sv.prev_code(b);
            break;
          }
          k = sv.prev_code(b);
        } else if (text[k] == ',' || text[k] == '.') {
          k = sv.prev_code(k);
        } else {
          break;
        }
      }
      if (!found || k == std::string_view::npos) continue;
      q = k;
    }
    if (text[q] != ')' || paren_open[q] == std::string_view::npos) continue;
    const std::size_t lp = paren_open[q];
    const std::size_t name_last = sv.prev_code(lp);
    if (name_last == std::string_view::npos || !detail::is_ident_char(text[name_last])) continue;
    const std::size_t name_begin = sv.ident_begin(name_last);
    const std::string_view name = text.substr(name_begin, name_last - name_begin + 1);
    if (!detail::is_ident_start(name.front()) || detail::is_call_keyword(name)) continue;
    const std::size_t before_name = sv.prev_code(name_begin);
    if (before_name != std::string_view::npos) {
      const char bc = text[before_name];
      if (bc == '@' || bc == '.' || bc == '=' || bc == '(' || bc == ',') continue;
      if (detail::is_ident_char(bc)) {
        const std::size_t wb = sv.ident_begin(before_name);
        if (text.substr(wb, before_name - wb + 1) == "new") continue;
      }
    }

    const std::size_t close = brace_close[p];
    // Declaration starts after the previous statement/block delimiter.
    std::size_t decl = name_begin;
    for (std::size_t k = name_begin; k > 0; --k) {
      const std::size_t i = k - 1;
      if (sv.code(i) && (text[i] == ';' || text[i] == '{' || text[i] == '}')) break;
      if (sv.code(i) && !sv.space(i)) decl = i;
    }

    MethodRecord m;
    m.path = file.path;
    m.name = std::string(name);
    m.revision = file.revision;
    const std::string params = detail::collapse_ws(sv.code_text(lp, q + 1));
    m.id = file.path + "::" + m.name + params;
    m.tokens = tokenize(sv.code_text(decl, close + 1));

    // Leading comment: the nearest comment separated from the declaration by
    // whitespace only; consecutive line comments are merged.
    {
      std::vector<const detail::CommentSpan*> picked;
      std::size_t limit = decl;
      for (auto it = lx.comments.rbegin(); it != lx.comments.rend(); ++it) {
        if (it->end > limit) continue;
        bool gap_is_space = true;
        for (std::size_t i = it->end; i < limit; ++i) {
          if (!sv.space(i)) {
            gap_is_space = false;
            break;
          }
        }
        if (!gap_is_space) break;
        if (!picked.empty() && !(picked.back()->line && it->line)) break;
        picked.push_back(&*it);
        limit = it->begin;
        if (!it->line) break;
      }
      std::string comment_text;
      for (auto it = picked.rbegin(); it != picked.rend(); ++it) {
        comment_text += detail::strip_comment_markers(text.substr((*it)->begin, (*it)->end - (*it)->begin));
        comment_text += ' ';
      }
      m.comment = tokenize(comment_text);
    }

    // Calls and top-level statements in the body.
    int depth = 0;
    int paren_depth = 0;
    for (std::size_t i = p + 1; i < close; ++i) {
      if (!sv.code(i)) continue;
      const char c = text[i];
      if (detail::is_ident_start(c) && (i == 0 || !detail::is_ident_char(text[i - 1]) || !sv.code(i - 1))) {
        std::size_t j = i;
        while (j < close && sv.code(j) && detail::is_ident_char(text[j])) ++j;
        const std::string_view word = text.substr(i, j - i);
        const std::size_t nx = sv.next_code(j);
        if (nx != std::string_view::npos && nx < close && text[nx] == '(' &&
            !detail::is_call_keyword(word)) {
          m.api_calls.emplace_back(word);
        }
        i = j - 1;
        continue;
      }
      switch (c) {
        case '(': ++paren_depth; break;
        case ')': paren_depth = std::max(0, paren_depth - 1); break;
        case '{':
          ++depth;
          break;
        case '}':
          --depth;
          if (depth == 0 && paren_depth == 0) {
            const std::size_t nx = sv.next_code(i + 1);
            if (nx == std::string_view::npos || nx >= close || text[nx] != ';') ++m.statement_count;
          }
          break;
        case ';':
          if (depth == 0 && paren_depth == 0) ++m.statement_count;
          break;
        default: break;
      }
    }

    methods.push_back(std::move(m));
    in_body = true;
    body_end = close;
  }

  // Resolve calls against methods of the same file, by simple name.
  std::multimap<std::string, std::string> by_name;
  for (const auto& m : methods) by_name.emplace(m.name, m.id);
  for (auto& m : methods) {
    for (const auto& call : m.api_calls) {
      auto [lo, hi] = by_name.equal_range(call);
      for (auto it = lo; it != hi; ++it) m.callees.insert(it->second);
    }
  }
  return methods;
}

}  // namespace revloc

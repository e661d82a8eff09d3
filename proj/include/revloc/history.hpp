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
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"

namespace revloc {

using FixLink = std::pair<std::string, std::string>;  // (report id, commit id)

namespace detail {

// Numeric part of a report id: "421" -> "421", "JDT-421" -> "421".
inline std::string numeric_key(const std::string& id) {
  std::size_t e = id.size();
  while (e > 0 && std::isdigit(static_cast<unsigned char>(id[e - 1])) == 0) --e;
  std::size_t b = e;
  while (b > 0 && std::isdigit(static_cast<unsigned char>(id[b - 1])) != 0) --b;
  std::string key = id.substr(b, e - b);
  const auto nz = key.find_first_not_of('0');
  return nz == std::string::npos ? (key.empty() ? key : "0") : key.substr(nz);
}

inline std::set<std::string> mentioned_bug_ids(const std::string& message) {
  static const std::regex kPattern(
      R"((?:#|\bbug[\s:#-]*|\bfix(?:es|ed)?[\s:#-]*)(?:[a-z]+-)?(\d+))", std::regex::icase);
  std::set<std::string> ids;
  for (auto it = std::sregex_iterator(message.begin(), message.end(), kPattern);
       it != std::sregex_iterator(); ++it) {
    ids.insert(numeric_key((*it)[1].str()));
  }
  return ids;
}

}  // namespace detail

/// Links commits to the reports they fix.
///
/// A commit fixes a report when its message mentions the report's number as
/// `#<id>`, `bug <id>` or `fix(es|ed) <id>` (case-insensitive) and the commit
/// is not older than the report. Pairs come out in commit order, once each.
inline std::vector<FixLink> link_fix_commits(const std::vector<CommitRecord>& commits,
                                             const std::vector<BugReportRecord>& reports) {
  std::multimap<std::string, const BugReportRecord*> by_key;
  for (const auto& r : reports) by_key.emplace(detail::numeric_key(r.id), &r);

  std::vector<FixLink> links;
  std::set<FixLink> seen;
  for (const auto& c : commits) {
    std::vector<std::string> matched;
    for (const auto& key : detail::mentioned_bug_ids(c.message)) {
      auto [lo, hi] = by_key.equal_range(key);
      for (auto it = lo; it != hi; ++it) {
        if (c.timestamp >= it->second->created_at) matched.push_back(it->second->id);
      }
    }
    std::sort(matched.begin(), matched.end());
    for (auto& rid : matched) {
      FixLink link{rid, c.id};
      if (seen.insert(link).second) links.push_back(std::move(link));
    }
  }
  return links;
}

/// Classifies the method-level changes between two consecutive snapshots.
/// Output is sorted by method id; unchanged methods are omitted.
inline std::vector<MethodChange> diff_revisions(const CorpusSnapshot& prev, const CorpusSnapshot& next) {
  if (next.revision != prev.revision + 1) {
    throw RevisionOrderError("cannot diff revision " + std::to_string(prev.revision) +
                             " against revision " + std::to_string(next.revision) +
                             ": revisions must be consecutive");
  }
  std::vector<MethodChange> out;
  auto a = prev.methods.begin();
  auto b = next.methods.begin();
  while (a != prev.methods.end() || b != next.methods.end()) {
    if (b == next.methods.end() || (a != prev.methods.end() && a->id < b->id)) {
      out.push_back({a->id, ChangeKind::kDeletion});
      ++a;
    } else if (a == prev.methods.end() || b->id < a->id) {
      out.push_back({b->id, ChangeKind::kAddition});
      ++b;
    } else {
      if (!a->same_content(*b)) out.push_back({a->id, ChangeKind::kModification});
      ++a;
      ++b;
    }
  }
  return out;
}

}  // namespace revloc

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
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "revloc/error.hpp"

namespace revloc {

using Timestamp = std::int64_t;  // UTC epoch seconds
using Revision = int;

enum class ChangeKind { kAddition, kDeletion, kModification };

inline std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::kAddition: return "addition";
    case ChangeKind::kDeletion: return "deletion";
    case ChangeKind::kModification: return "modification";
  }
  return "?";
}

inline ChangeKind parse_change_kind(std::string_view s) {
  if (s == "addition") return ChangeKind::kAddition;
  if (s == "deletion") return ChangeKind::kDeletion;
  if (s == "modification") return ChangeKind::kModification;
  throw FormatError("unknown change kind '" + std::string(s) + "'");
}

struct SourceFile {
  std::string path;
  Revision revision = 0;
  std::string content;
};

/// One revision of one method. `revision` is the revision in which this
/// version of the method first appeared.
struct MethodRecord {
  std::string id;  // path + "::" + signature
  std::string path;
  std::string name;
  Revision revision = 0;
  std::vector<std::string> tokens;
  std::vector<std::string> api_calls;
  std::vector<std::string> comment;
  std::set<std::string> callees;
  int statement_count = 0;

  /// True when the text-bearing views are identical.
  bool same_content(const MethodRecord& other) const {
    return tokens == other.tokens && api_calls == other.api_calls && comment == other.comment;
  }
  bool empty_views() const { return tokens.empty() && api_calls.empty() && comment.empty(); }
  friend bool operator==(const MethodRecord&, const MethodRecord&) = default;
};

struct BugReportRecord {
  std::string id;
  Timestamp created_at = 0;
  std::string text;
  std::vector<std::string> tokens;
  std::set<std::string> fixed_methods;
  std::string project;
  friend bool operator==(const BugReportRecord&, const BugReportRecord&) = default;
};

struct MethodChange {
  std::string method_id;
  ChangeKind kind = ChangeKind::kAddition;
  friend bool operator==(const MethodChange&, const MethodChange&) = default;
};

struct CommitRecord {
  std::string id;
  Timestamp timestamp = 0;
  std::string message;
  Revision revision = 0;  // revision produced by this commit
  std::vector<MethodChange> changes;
  std::vector<std::string> fixes;  // report ids, filled by linking
  friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

struct CorpusSnapshot {
  Revision revision = 0;
  std::vector<SourceFile> files;      // sorted by path
  std::vector<MethodRecord> methods;  // sorted by id, one per id
  std::vector<BugReportRecord> reports;
  std::vector<CommitRecord> commits;

  const MethodRecord* find_method(std::string_view id) const {
    auto it = std::lower_bound(methods.begin(), methods.end(), id,
                               [](const MethodRecord& m, std::string_view key) { return m.id < key; });
    return it != methods.end() && it->id == id ? &*it : nullptr;
  }

  void sort_methods() {
    std::sort(methods.begin(), methods.end(),
              [](const MethodRecord& a, const MethodRecord& b) { return a.id < b.id; });
  }
};

/// A linear history: snapshots[i].revision == i.
struct Corpus {
  std::vector<CorpusSnapshot> snapshots;

  Revision latest_revision() const { return static_cast<Revision>(snapshots.size()) - 1; }

  const CorpusSnapshot& snapshot(Revision r) const {
    if (r < 0 || r >= static_cast<Revision>(snapshots.size())) {
      throw UnresolvedReferenceError("unknown revision " + std::to_string(r));
    }
    return snapshots[static_cast<std::size_t>(r)];
  }

  std::vector<const BugReportRecord*> reports() const {
    std::vector<const BugReportRecord*> out;
    for (const auto& s : snapshots)
      for (const auto& r : s.reports) out.push_back(&r);
    return out;
  }

  std::vector<const CommitRecord*> commits() const {
    std::vector<const CommitRecord*> out;
    for (const auto& s : snapshots)
      for (const auto& c : s.commits) out.push_back(&c);
    return out;
  }

  const BugReportRecord* find_report(std::string_view id) const {
    for (const auto& s : snapshots)
      for (const auto& r : s.reports)
        if (r.id == id) return &r;
    return nullptr;
  }
};

}  // namespace revloc

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
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"
#include "revloc/extract.hpp"
#include "revloc/history.hpp"
#include "revloc/tokenize.hpp"

// Corpus JSONL: one object per line, tagged by "kind".
//
//   {"kind":"file","path":P,"revision":R[,"content":TEXT][,"deleted":true]}
//   {"kind":"method","id":ID,"revision":R,"name":..,"path":..,"tokens":[..],
//    "api_calls":[..],"comment":[..],"callees":[..],"statement_count":N}
//   {"kind":"method","id":ID,"revision":R,"deleted":true}
//   {"kind":"report","id":ID,"created_at":T,"text":..,"tokens":[..],
//    "fixed_methods":[..],"project":..}
//   {"kind":"commit","id":ID,"revision":R,"timestamp":T,"message":..,
//    "changes":[{"method":ID,"kind":"addition|deletion|modification"}],"fixes":[..]}
//
// File and method records are deltas: a record at revision R holds from R
// until it is superseded or deleted. A file record with content replaces the
// methods of that path with the methods extracted from it.

namespace revloc {

struct RawCorpus {
  struct FileEntry {
    SourceFile file;
    bool has_content = false;
    bool deleted = false;
  };
  struct MethodEntry {
    MethodRecord method;
    bool deleted = false;
  };
  std::vector<FileEntry> files;
  std::vector<MethodEntry> methods;
  std::vector<BugReportRecord> reports;
  std::vector<CommitRecord> commits;
};

struct IngestSummary {
  std::size_t revisions = 0;
  std::size_t files = 0;            // distinct paths
  std::size_t method_versions = 0;  // distinct (id, revision)
  std::size_t methods_latest = 0;   // live methods at the latest revision
  std::size_t reports = 0;
  std::size_t commits = 0;
  std::size_t fix_links = 0;
  std::size_t linked_reports = 0;
};

namespace detail {

inline std::string path_from_id(const std::string& id) {
  const auto p = id.find("::");
  return p == std::string::npos ? std::string() : id.substr(0, p);
}

inline std::string name_from_id(const std::string& id) {
  const auto p = id.find("::");
  std::string rest = p == std::string::npos ? id : id.substr(p + 2);
  const auto q = rest.find('(');
  return q == std::string::npos ? rest : rest.substr(0, q);
}

template <class T>
T required(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) {
    throw FormatError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("line " + std::to_string(line) + ": bad field '" + key + "': " + e.what());
  }
}

template <class T>
T optional_field(const nlohmann::json& j, const char* key, T fallback, std::size_t line) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return required<T>(j, key, line);
}

}  // namespace detail

inline RawCorpus parse_corpus_jsonl(std::istream& in) {
  RawCorpus raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("line " + std::to_string(line_no) + ": expected an object");
    const auto kind = detail::required<std::string>(j, "kind", line_no);
    using V = std::vector<std::string>;
    if (kind == "file") {
      RawCorpus::FileEntry e;
      e.file.path = detail::required<std::string>(j, "path", line_no);
      e.file.revision = detail::required<Revision>(j, "revision", line_no);
      e.deleted = detail::optional_field<bool>(j, "deleted", false, line_no);
      if (j.contains("content")) {
        e.file.content = detail::required<std::string>(j, "content", line_no);
        e.has_content = true;
      }
      if (e.file.path.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty path");
      if (e.file.revision < 0) throw FormatError("line " + std::to_string(line_no) + ": negative revision");
      raw.files.push_back(std::move(e));
    } else if (kind == "method") {
      RawCorpus::MethodEntry e;
      auto& m = e.method;
      m.id = detail::required<std::string>(j, "id", line_no);
      m.revision = detail::required<Revision>(j, "revision", line_no);
      e.deleted = detail::optional_field<bool>(j, "deleted", false, line_no);
      m.path = detail::optional_field<std::string>(j, "path", detail::path_from_id(m.id), line_no);
      m.name = detail::optional_field<std::string>(j, "name", detail::name_from_id(m.id), line_no);
      m.tokens = detail::optional_field<V>(j, "tokens", {}, line_no);
      m.api_calls = detail::optional_field<V>(j, "api_calls", {}, line_no);
      m.comment = detail::optional_field<V>(j, "comment", {}, line_no);
      const auto callees = detail::optional_field<V>(j, "callees", {}, line_no);
      m.callees = std::set<std::string>(callees.begin(), callees.end());
      m.statement_count = detail::optional_field<int>(j, "statement_count", 0, line_no);
      if (m.id.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty method id");
      if (m.revision < 0 || m.statement_count < 0) {
        throw FormatError("line " + std::to_string(line_no) + ": negative revision or statement count");
      }
      raw.methods.push_back(std::move(e));
    } else if (kind == "report") {
      BugReportRecord r;
      r.id = detail::required<std::string>(j, "id", line_no);
      r.created_at = detail::required<Timestamp>(j, "created_at", line_no);
      r.text = detail::optional_field<std::string>(j, "text", "", line_no);
      r.tokens = detail::optional_field<V>(j, "tokens", {}, line_no);
      if (r.tokens.empty()) r.tokens = tokenize(r.text);
      const auto fixed = detail::optional_field<V>(j, "fixed_methods", {}, line_no);
      r.fixed_methods = std::set<std::string>(fixed.begin(), fixed.end());
      r.project = detail::optional_field<std::string>(j, "project", "", line_no);
      raw.reports.push_back(std::move(r));
    } else if (kind == "commit") {
      CommitRecord c;
      c.id = detail::required<std::string>(j, "id", line_no);
      c.revision = detail::required<Revision>(j, "revision", line_no);
      c.timestamp = detail::required<Timestamp>(j, "timestamp", line_no);
      c.message = detail::optional_field<std::string>(j, "message", "", line_no);
      c.fixes = detail::optional_field<V>(j, "fixes", {}, line_no);
      if (j.contains("changes")) {
        for (const auto& ch : j.at("changes")) {
          c.changes.push_back({detail::required<std::string>(ch, "method", line_no),
                               parse_change_kind(detail::required<std::string>(ch, "kind", line_no))});
        }
      }
      raw.commits.push_back(std::move(c));
    } else {
      throw FormatError("line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
  }
  return raw;
}

/// Materializes snapshots, recomputes commit change sets, places reports in
/// the snapshot current at their creation time, and links fix commits.
inline Corpus normalize_corpus(const RawCorpus& raw, std::vector<FixLink>* links_out = nullptr) {
  Revision last = 0;
  for (const auto& f : raw.files) last = std::max(last, f.file.revision);
  for (const auto& m : raw.methods) last = std::max(last, m.method.revision);
  for (const auto& c : raw.commits) last = std::max(last, c.revision);

  std::vector<std::optional<CommitRecord>> commit_at(static_cast<std::size_t>(last) + 1);
  for (const auto& c : raw.commits) {
    if (c.revision < 0) throw RevisionOrderError("commit " + c.id + " has a negative revision");
    auto& slot = commit_at[static_cast<std::size_t>(c.revision)];
    if (slot) {
      throw RevisionOrderError("revision " + std::to_string(c.revision) + " is produced by both " +
                               slot->id + " and " + c.id + "; only linear histories are supported");
    }
    slot = c;
  }
  {
    std::optional<Timestamp> prev;
    Revision prev_rev = 0;
    for (Revision r = 0; r <= last; ++r) {
      const auto& c = commit_at[static_cast<std::size_t>(r)];
      if (!c) continue;
      if (prev && c->timestamp < *prev) {
        throw RevisionOrderError("commit at revision " + std::to_string(r) + " is older than the commit at revision " +
                                 std::to_string(prev_rev));
      }
      prev = c->timestamp;
      prev_rev = r;
    }
  }

  std::map<Revision, std::vector<const RawCorpus::FileEntry*>> files_at;
  for (const auto& f : raw.files) files_at[f.file.revision].push_back(&f);
  std::map<Revision, std::vector<const RawCorpus::MethodEntry*>> methods_at;
  for (const auto& m : raw.methods) methods_at[m.method.revision].push_back(&m);

  Corpus corpus;
  corpus.snapshots.resize(static_cast<std::size_t>(last) + 1);
  std::map<std::string, SourceFile> live_files;
  std::map<std::string, MethodRecord> live_methods;

  auto upsert = [&live_methods](MethodRecord m, Revision r) {
    m.revision = r;
    auto it = live_methods.find(m.id);
    if (it != live_methods.end() && it->second.same_content(m)) return;
    live_methods[m.id] = std::move(m);
  };

  for (Revision r = 0; r <= last; ++r) {
    for (const auto* f : files_at[r]) {
      if (f->deleted) {
        live_files.erase(f->file.path);
        std::erase_if(live_methods, [&](const auto& kv) { return kv.second.path == f->file.path; });
        continue;
      }
      if (!live_files.contains(f->file.path)) live_files[f->file.path] = SourceFile{f->file.path, r, {}};
      if (f->has_content) {
        auto extracted = extract_methods(f->file);
        std::set<std::string> keep;
        for (const auto& m : extracted) keep.insert(m.id);
        std::erase_if(live_methods, [&](const auto& kv) {
          return kv.second.path == f->file.path && !keep.contains(kv.first);
        });
        for (auto& m : extracted) upsert(std::move(m), r);
      }
    }
    for (const auto* e : methods_at[r]) {
      if (e->deleted) {
        live_methods.erase(e->method.id);
        continue;
      }
      if (!e->method.path.empty() && !live_files.contains(e->method.path)) {
        live_files[e->method.path] = SourceFile{e->method.path, r, {}};
      }
      upsert(e->method, r);
    }
    auto& snap = corpus.snapshots[static_cast<std::size_t>(r)];
    snap.revision = r;
    for (const auto& [path, f] : live_files) snap.files.push_back(f);
    for (const auto& [id, m] : live_methods) snap.methods.push_back(m);
  }

  // Commit change sets come from the snapshot diff.
  for (Revision r = 0; r <= last; ++r) {
    auto& c = commit_at[static_cast<std::size_t>(r)];
    if (!c) continue;
    c->changes.clear();
    if (r > 0) {
      c->changes = diff_revisions(corpus.snapshots[static_cast<std::size_t>(r) - 1],
                                  corpus.snapshots[static_cast<std::size_t>(r)]);
    } else {
      for (const auto& m : corpus.snapshots[0].methods) c->changes.push_back({m.id, ChangeKind::kAddition});
    }
    c->fixes.clear();
  }

  std::vector<CommitRecord> commits;
  for (const auto& c : commit_at)
    if (c) commits.push_back(*c);
  std::vector<BugReportRecord> reports = raw.reports;
  {
    std::set<std::string> ids;
    for (const auto& r : reports)
      if (!ids.insert(r.id).second) throw FormatError("duplicate report id " + r.id);
  }
  const auto links = link_fix_commits(commits, reports);
  std::map<std::string, CommitRecord*> commit_by_id;
  for (auto& c : commits) commit_by_id[c.id] = &c;
  std::map<std::string, std::set<std::string>> derived_truth;
  for (const auto& [rid, cid] : links) {
    auto* c = commit_by_id.at(cid);
    c->fixes.push_back(rid);
    for (const auto& ch : c->changes) {
      if (ch.kind != ChangeKind::kAddition) derived_truth[rid].insert(ch.method_id);
    }
  }
  for (auto& r : reports) {
    if (r.fixed_methods.empty()) {
      auto it = derived_truth.find(r.id);
      if (it != derived_truth.end()) r.fixed_methods = it->second;
    }
  }

  // Revision time: timestamp of the newest commit at or before the revision.
  std::vector<std::optional<Timestamp>> rev_time(static_cast<std::size_t>(last) + 1);
  for (Revision r = 0; r <= last; ++r) {
    const auto& c = commit_at[static_cast<std::size_t>(r)];
    rev_time[static_cast<std::size_t>(r)] =
        c ? std::optional<Timestamp>(c->timestamp) : (r > 0 ? rev_time[static_cast<std::size_t>(r) - 1] : std::nullopt);
  }
  for (auto& c : commits) corpus.snapshots[static_cast<std::size_t>(c.revision)].commits.push_back(std::move(c));
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  for (auto& rep : reports) {
    Revision placed = 0;
    for (Revision r = 0; r <= last; ++r) {
      const auto& t = rev_time[static_cast<std::size_t>(r)];
      if (t && *t <= rep.created_at) placed = r;
    }
    corpus.snapshots[static_cast<std::size_t>(placed)].reports.push_back(std::move(rep));
  }
  if (links_out) *links_out = links;
  return corpus;
}

inline IngestSummary summarize(const Corpus& corpus, std::size_t fix_links) {
  IngestSummary s;
  s.revisions = corpus.snapshots.size();
  std::set<std::string> paths;
  std::set<std::pair<std::string, Revision>> versions;
  for (const auto& snap : corpus.snapshots) {
    for (const auto& f : snap.files) paths.insert(f.path);
    for (const auto& m : snap.methods) versions.emplace(m.id, m.revision);
    s.reports += snap.reports.size();
    s.commits += snap.commits.size();
    for (const auto& r : snap.reports) s.linked_reports += r.fixed_methods.empty() ? 0 : 1;
  }
  s.files = paths.size();
  s.method_versions = versions.size();
  s.methods_latest = corpus.snapshots.empty() ? 0 : corpus.snapshots.back().methods.size();
  s.fix_links = fix_links;
  return s;
}

inline nlohmann::json method_to_json(const MethodRecord& m) {
  return nlohmann::json{{"kind", "method"},
                        {"id", m.id},
                        {"revision", m.revision},
                        {"path", m.path},
                        {"name", m.name},
                        {"tokens", m.tokens},
                        {"api_calls", m.api_calls},
                        {"comment", m.comment},
                        {"callees", std::vector<std::string>(m.callees.begin(), m.callees.end())},
                        {"statement_count", m.statement_count}};
}

inline nlohmann::json report_to_json(const BugReportRecord& r) {
  nlohmann::json j{{"kind", "report"},
                   {"id", r.id},
                   {"created_at", r.created_at},
                   {"text", r.text},
                   {"tokens", r.tokens},
                   {"fixed_methods", std::vector<std::string>(r.fixed_methods.begin(), r.fixed_methods.end())}};
  if (!r.project.empty()) j["project"] = r.project;
  return j;
}

inline nlohmann::json commit_to_json(const CommitRecord& c) {
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& ch : c.changes) changes.push_back({{"method", ch.method_id}, {"kind", to_string(ch.kind)}});
  return nlohmann::json{{"kind", "commit"},    {"id", c.id},       {"revision", c.revision},
                        {"timestamp", c.timestamp}, {"message", c.message}, {"changes", changes},
                        {"fixes", c.fixes}};
}

/// Writes the normalized corpus as delta-encoded JSONL. Reading the output
/// back with parse_corpus_jsonl + normalize_corpus reproduces `corpus`.
inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  const CorpusSnapshot empty;
  for (const auto& snap : corpus.snapshots) {
    const CorpusSnapshot& prev = snap.revision == 0 ? empty : corpus.snapshots[static_cast<std::size_t>(snap.revision) - 1];
    std::set<std::string> prev_paths;
    for (const auto& f : prev.files) prev_paths.insert(f.path);
    std::set<std::string> cur_paths;
    for (const auto& f : snap.files) cur_paths.insert(f.path);
    for (const auto& p : cur_paths) {
      if (!prev_paths.contains(p)) {
        out << nlohmann::json{{"kind", "file"}, {"path", p}, {"revision", snap.revision}}.dump() << '\n';
      }
    }
    for (const auto& p : prev_paths) {
      if (!cur_paths.contains(p)) {
        out << nlohmann::json{{"kind", "file"}, {"path", p}, {"revision", snap.revision}, {"deleted", true}}.dump()
            << '\n';
      }
    }
    for (const auto& m : snap.methods) {
      const MethodRecord* before = prev.find_method(m.id);
      if (before == nullptr || before->revision != m.revision) out << method_to_json(m).dump() << '\n';
    }
    for (const auto& m : prev.methods) {
      if (snap.find_method(m.id) == nullptr) {
        out << nlohmann::json{{"kind", "method"}, {"id", m.id}, {"revision", snap.revision}, {"deleted", true}}.dump()
            << '\n';
      }
    }
    for (const auto& c : snap.commits) out << commit_to_json(c).dump() << '\n';
    for (const auto& r : snap.reports) out << report_to_json(r).dump() << '\n';
  }
}

inline Corpus read_corpus_jsonl(std::istream& in, std::vector<FixLink>* links_out = nullptr) {
  return normalize_corpus(parse_corpus_jsonl(in), links_out);
}

}  // namespace revloc

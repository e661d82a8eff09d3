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
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"
#include "revloc/history.hpp"

namespace revloc {

enum class NodeKind { kRepository, kReport, kCommit, kFile, kMethod };
enum class EdgeKind { kHas, kModify, kCall, kFix, kSimilarTo, kUpdate };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kRepository: return "repository";
    case NodeKind::kReport: return "report";
    case NodeKind::kCommit: return "commit";
    case NodeKind::kFile: return "file";
    case NodeKind::kMethod: return "method";
  }
  return "?";
}

inline std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::kHas: return "has";
    case EdgeKind::kModify: return "modify";
    case EdgeKind::kCall: return "call";
    case EdgeKind::kFix: return "fix";
    case EdgeKind::kSimilarTo: return "similar-to";
    case EdgeKind::kUpdate: return "update";
  }
  return "?";
}

inline NodeKind parse_node_kind(std::string_view s) {
  for (auto k : {NodeKind::kRepository, NodeKind::kReport, NodeKind::kCommit, NodeKind::kFile, NodeKind::kMethod})
    if (to_string(k) == s) return k;
  throw FormatError("unknown node kind '" + std::string(s) + "'");
}

inline EdgeKind parse_edge_kind(std::string_view s) {
  for (auto k : {EdgeKind::kHas, EdgeKind::kModify, EdgeKind::kCall, EdgeKind::kFix, EdgeKind::kSimilarTo,
                 EdgeKind::kUpdate})
    if (to_string(k) == s) return k;
  throw FormatError("unknown edge kind '" + std::string(s) + "'");
}

/// A graph entity. Code entities (files, methods) get one node per revision
/// in which a new version appeared; `retired_at` is the revision at which the
/// version stopped being live (superseded or deleted), -1 while live.
struct Node {
  NodeKind kind = NodeKind::kMethod;
  std::string key;
  Revision revision = 0;
  Revision retired_at = -1;
  bool deleted = false;  // tombstone: retired by a deletion
  Timestamp time = 0;    // report creation / commit time

  bool live() const { return retired_at < 0; }
  bool live_at(Revision r) const { return revision <= r && (retired_at < 0 || retired_at > r); }
  auto tie() const { return std::tie(kind, key, revision, retired_at, deleted, time); }
  friend bool operator==(const Node& a, const Node& b) { return a.tie() == b.tie(); }
  friend bool operator<(const Node& a, const Node& b) { return a.tie() < b.tie(); }
};

struct Edge {
  EdgeKind kind = EdgeKind::kHas;
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 1.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Typed multigraph of repositories, reports, commits, files and methods.
class RevisionGraph {
 public:
  using NodeId = std::size_t;
  static constexpr Revision kNoRevision = -1;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  bool empty() const { return nodes_.empty(); }
  Revision revision() const { return revision_; }
  void set_revision(Revision r) { revision_ = r; }

  NodeId add_node(Node n) {
    auto key = std::make_tuple(n.kind, n.key, n.revision);
    if (index_.contains(key)) {
      throw ArgumentError("duplicate " + std::string(to_string(n.kind)) + " node " + n.key + "@" +
                          std::to_string(n.revision));
    }
    const NodeId id = nodes_.size();
    index_.emplace(std::move(key), id);
    if (n.kind == NodeKind::kMethod || n.kind == NodeKind::kFile || n.kind == NodeKind::kReport ||
        n.kind == NodeKind::kCommit) {
      versions_[{n.kind, n.key}].push_back(id);
    }
    nodes_.push_back(std::move(n));
    out_.emplace_back();
    in_.emplace_back();
    return id;
  }

  void add_edge(EdgeKind kind, NodeId from, NodeId to, double weight = 1.0) {
    if (from >= nodes_.size() || to >= nodes_.size()) {
      throw UnresolvedReferenceError("edge references a missing node");
    }
    out_[from].push_back(edges_.size());
    in_[to].push_back(edges_.size());
    edges_.push_back({kind, from, to, weight});
  }

  void retire(NodeId id, Revision r, bool deleted) {
    nodes_.at(id).retired_at = r;
    nodes_.at(id).deleted = deleted;
  }

  std::optional<NodeId> find(NodeKind kind, const std::string& key, Revision revision) const {
    auto it = index_.find(std::make_tuple(kind, key, revision));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// All nodes of one entity, oldest first.
  const std::vector<NodeId>& versions(NodeKind kind, const std::string& key) const {
    static const std::vector<NodeId> kNone;
    auto it = versions_.find({kind, key});
    return it == versions_.end() ? kNone : it->second;
  }

  std::optional<NodeId> latest(NodeKind kind, const std::string& key) const {
    const auto& v = versions(kind, key);
    if (v.empty()) return std::nullopt;
    return v.back();
  }

  std::optional<NodeId> live(NodeKind kind, const std::string& key) const {
    auto n = latest(kind, key);
    if (n && nodes_[*n].live()) return n;
    return std::nullopt;
  }

  std::optional<NodeId> live_at(NodeKind kind, const std::string& key, Revision r) const {
    const auto& v = versions(kind, key);
    for (auto it = v.rbegin(); it != v.rend(); ++it)
      if (nodes_[*it].live_at(r)) return *it;
    return std::nullopt;
  }

  std::optional<NodeId> repository() const {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].kind == NodeKind::kRepository) return i;
    return std::nullopt;
  }

  const std::vector<std::size_t>& out_edges(NodeId id) const { return out_.at(id); }
  const std::vector<std::size_t>& in_edges(NodeId id) const { return in_.at(id); }

  /// Keys of all entities of `kind`, sorted.
  std::vector<std::string> keys(NodeKind kind) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : versions_)
      if (k.first == kind) out.push_back(k.second);
    return out;
  }

  void clear_edges(EdgeKind kind) {
    std::vector<Edge> kept;
    for (const auto& e : edges_)
      if (e.kind != kind) kept.push_back(e);
    edges_.clear();
    for (auto& v : out_) v.clear();
    for (auto& v : in_) v.clear();
    for (const auto& e : kept) add_edge(e.kind, e.from, e.to, e.weight);
  }

  /// Node and edge multisets with edges expressed through node contents, so
  /// graphs built along different routes compare equal.
  struct CanonicalForm {
    std::vector<Node> nodes;
    std::vector<std::tuple<EdgeKind, Node, Node, double>> edges;
    friend bool operator==(const CanonicalForm& a, const CanonicalForm& b) {
      return a.nodes == b.nodes && a.edges == b.edges;
    }
  };

  CanonicalForm canonical() const {
    CanonicalForm c;
    c.nodes = nodes_;
    std::sort(c.nodes.begin(), c.nodes.end());
    for (const auto& e : edges_) c.edges.emplace_back(e.kind, nodes_[e.from], nodes_[e.to], e.weight);
    std::sort(c.edges.begin(), c.edges.end(), [](const auto& a, const auto& b) {
      const auto& [ka, fa, ta, wa] = a;
      const auto& [kb, fb, tb, wb] = b;
      if (ka != kb) return ka < kb;
      if (!(fa == fb)) return fa < fb;
      if (!(ta == tb)) return ta < tb;
      return wa < wb;
    });
    return c;
  }

  std::size_t count_nodes(NodeKind kind) const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [kind](const Node& n) { return n.kind == kind; }));
  }
  std::size_t count_edges(EdgeKind kind) const {
    return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
  }

  /// Exact equality, including node order and edge order.
  friend bool operator==(const RevisionGraph& a, const RevisionGraph& b) {
    return a.revision_ == b.revision_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::map<std::tuple<NodeKind, std::string, Revision>, NodeId> index_;
  std::map<std::pair<NodeKind, std::string>, std::vector<NodeId>> versions_;
  Revision revision_ = kNoRevision;
};

inline constexpr const char* kRepositoryKey = "repository";

namespace detail {

inline RevisionGraph::NodeId ensure_repository(RevisionGraph& g, Revision r) {
  if (auto id = g.repository()) return *id;
  return g.add_node(Node{NodeKind::kRepository, kRepositoryKey, r, -1, false, 0});
}

inline RevisionGraph::NodeId report_node(const RevisionGraph& g, const std::string& id) {
  auto n = g.latest(NodeKind::kReport, id);
  if (!n) throw UnresolvedReferenceError("fix link references unknown report " + id);
  return *n;
}

}  // namespace detail

/// Merges one revision into the graph. Additions insert nodes, deletions
/// tombstone them, modifications add a new node linked by an update edge.
inline void apply_revision(RevisionGraph& graph, const std::vector<MethodChange>& changes,
                           const CorpusSnapshot& snapshot) {
  using NodeId = RevisionGraph::NodeId;
  const Revision r = snapshot.revision;
  if (!graph.empty() && r != graph.revision() + 1) {
    throw RevisionOrderError("cannot apply revision " + std::to_string(r) + " on top of revision " +
                             std::to_string(graph.revision()));
  }
  const NodeId repo = detail::ensure_repository(graph, r);

  std::vector<NodeId> commit_nodes;
  for (const auto& c : snapshot.commits) {
    commit_nodes.push_back(graph.add_node(Node{NodeKind::kCommit, c.id, r, -1, false, c.timestamp}));
  }
  for (const auto& rep : snapshot.reports) {
    if (graph.latest(NodeKind::kReport, rep.id)) throw ArgumentError("report " + rep.id + " ingested twice");
    graph.add_node(Node{NodeKind::kReport, rep.id, r, -1, false, rep.created_at});
  }

  // Files.
  std::set<std::string> paths;
  for (const auto& f : snapshot.files) paths.insert(f.path);
  for (const auto& m : snapshot.methods)
    if (!m.path.empty()) paths.insert(m.path);
  for (const auto& key : graph.keys(NodeKind::kFile)) {
    auto n = graph.live(NodeKind::kFile, key);
    if (n && !paths.contains(key)) graph.retire(*n, r, true);
  }
  for (const auto& p : paths) {
    if (graph.live(NodeKind::kFile, p)) continue;
    auto prev = graph.latest(NodeKind::kFile, p);
    const NodeId f = graph.add_node(Node{NodeKind::kFile, p, r, -1, false, 0});
    graph.add_edge(EdgeKind::kHas, repo, f);
    if (prev) graph.add_edge(EdgeKind::kUpdate, *prev, f);
  }

  auto attribute = [&](NodeId method_node) {
    for (NodeId c : commit_nodes) graph.add_edge(EdgeKind::kModify, c, method_node);
  };
  std::vector<std::pair<NodeId, const MethodRecord*>> created;
  auto create = [&](const MethodRecord& rec, std::optional<NodeId> prev) {
    const NodeId n = graph.add_node(Node{NodeKind::kMethod, rec.id, r, -1, false, 0});
    if (prev) graph.add_edge(EdgeKind::kUpdate, *prev, n);
    if (auto f = graph.live(NodeKind::kFile, rec.path)) graph.add_edge(EdgeKind::kHas, *f, n);
    created.emplace_back(n, &rec);
    return n;
  };

  for (const auto& ch : changes) {
    const MethodRecord* rec = snapshot.find_method(ch.method_id);
    const auto current = graph.live(NodeKind::kMethod, ch.method_id);
    switch (ch.kind) {
      case ChangeKind::kAddition: {
        if (!rec) throw UnresolvedReferenceError("added method " + ch.method_id + " missing from revision " + std::to_string(r));
        if (current) throw UnresolvedReferenceError("added method " + ch.method_id + " is already live");
        attribute(create(*rec, graph.latest(NodeKind::kMethod, ch.method_id)));
        break;
      }
      case ChangeKind::kDeletion: {
        if (!current) throw UnresolvedReferenceError("deleted method " + ch.method_id + " is not in the graph");
        graph.retire(*current, r, true);
        attribute(*current);
        break;
      }
      case ChangeKind::kModification: {
        if (!current) throw UnresolvedReferenceError("modified method " + ch.method_id + " is not in the graph");
        if (!rec) throw UnresolvedReferenceError("modified method " + ch.method_id + " missing from revision " + std::to_string(r));
        graph.retire(*current, r, false);
        attribute(*current);
        create(*rec, current);
        break;
      }
    }
  }

  for (const auto& [node, rec] : created) {
    for (const auto& callee : rec->callees) {
      if (auto target = graph.live(NodeKind::kMethod, callee)) graph.add_edge(EdgeKind::kCall, node, *target);
    }
  }

  for (std::size_t i = 0; i < snapshot.commits.size(); ++i) {
    for (const auto& rid : snapshot.commits[i].fixes) {
      graph.add_edge(EdgeKind::kFix, commit_nodes[i], detail::report_node(graph, rid));
    }
  }
  graph.set_revision(r);
}

/// Builds the graph for a whole history in one pass over per-entity
/// timelines. Produces the same node/edge multisets as applying every
/// revision in turn with apply_revision.
inline RevisionGraph build_graph(const std::vector<CorpusSnapshot>& snapshots,
                                 const std::vector<FixLink>& fix_links = {}) {
  using NodeId = RevisionGraph::NodeId;
  RevisionGraph g;
  if (snapshots.empty()) return g;
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    if (snapshots[i].revision != snapshots[i - 1].revision + 1) {
      throw RevisionOrderError("snapshots out of order: revision " + std::to_string(snapshots[i].revision) +
                               " follows revision " + std::to_string(snapshots[i - 1].revision));
    }
  }
  const Revision first = snapshots.front().revision;
  const Revision last = snapshots.back().revision;
  auto snap = [&](Revision r) -> const CorpusSnapshot& { return snapshots[static_cast<std::size_t>(r - first)]; };

  std::map<std::string, std::set<std::string>> fixes;  // commit -> reports
  std::set<std::string> known_reports, known_commits;
  for (const auto& s : snapshots) {
    for (const auto& rep : s.reports) known_reports.insert(rep.id);
    for (const auto& c : s.commits) {
      known_commits.insert(c.id);
      fixes[c.id].insert(c.fixes.begin(), c.fixes.end());
    }
  }
  for (const auto& [rid, cid] : fix_links) {
    if (!known_reports.contains(rid)) throw UnresolvedReferenceError("fix link references unknown report " + rid);
    if (!known_commits.contains(cid)) throw UnresolvedReferenceError("fix link references unknown commit " + cid);
    fixes[cid].insert(rid);
  }

  const NodeId repo = g.add_node(Node{NodeKind::kRepository, kRepositoryKey, first, -1, false, 0});
  std::map<std::string, NodeId> commit_node;
  std::map<Revision, std::vector<NodeId>> commits_at;
  for (Revision r = first; r <= last; ++r) {
    for (const auto& c : snap(r).commits) {
      const NodeId n = g.add_node(Node{NodeKind::kCommit, c.id, r, -1, false, c.timestamp});
      commit_node[c.id] = n;
      commits_at[r].push_back(n);
    }
    for (const auto& rep : snap(r).reports) g.add_node(Node{NodeKind::kReport, rep.id, r, -1, false, rep.created_at});
  }

  // File timelines.
  std::map<std::string, std::vector<bool>> file_presence;
  for (Revision r = first; r <= last; ++r) {
    for (const auto& f : snap(r).files) file_presence[f.path].resize(static_cast<std::size_t>(last - first + 1));
    for (const auto& m : snap(r).methods)
      if (!m.path.empty()) file_presence[m.path].resize(static_cast<std::size_t>(last - first + 1));
  }
  for (Revision r = first; r <= last; ++r) {
    for (const auto& f : snap(r).files) file_presence[f.path][static_cast<std::size_t>(r - first)] = true;
    for (const auto& m : snap(r).methods)
      if (!m.path.empty()) file_presence[m.path][static_cast<std::size_t>(r - first)] = true;
  }
  for (const auto& [path, present] : file_presence) {
    std::optional<NodeId> prev;
    for (Revision r = first; r <= last; ++r) {
      const bool here = present[static_cast<std::size_t>(r - first)];
      const bool before = r > first && present[static_cast<std::size_t>(r - first - 1)];
      if (here && !before) {
        const NodeId n = g.add_node(Node{NodeKind::kFile, path, r, -1, false, 0});
        g.add_edge(EdgeKind::kHas, repo, n);
        if (prev) g.add_edge(EdgeKind::kUpdate, *prev, n);
        prev = n;
      } else if (!here && before) {
        g.retire(*prev, r, true);
      }
    }
  }

  // Method timelines: a new version starts whenever the method appears or its
  // content differs from the previous revision.
  struct Version {
    NodeId node;
    const MethodRecord* record;
  };
  std::vector<Version> created;
  std::map<std::string, std::vector<std::pair<Revision, const MethodRecord*>>> timeline;
  for (Revision r = first; r <= last; ++r)
    for (const auto& m : snap(r).methods) timeline[m.id].emplace_back(r, &m);
  for (const auto& [id, entries] : timeline) {
    std::optional<NodeId> prev;
    const MethodRecord* prev_rec = nullptr;
    Revision prev_r = first - 2;
    auto modify = [&](Revision r, NodeId n) {
      for (NodeId c : commits_at[r]) g.add_edge(EdgeKind::kModify, c, n);
    };
    for (const auto& [r, rec] : entries) {
      const bool contiguous = prev_rec != nullptr && prev_r == r - 1;
      if (prev_rec != nullptr && !contiguous) {
        g.retire(*prev, prev_r + 1, true);
        modify(prev_r + 1, *prev);
      }
      if (!contiguous || !prev_rec->same_content(*rec)) {
        const NodeId n = g.add_node(Node{NodeKind::kMethod, id, r, -1, false, 0});
        if (prev) g.add_edge(EdgeKind::kUpdate, *prev, n);
        if (auto f = g.live_at(NodeKind::kFile, rec->path, r)) g.add_edge(EdgeKind::kHas, *f, n);
        if (contiguous) {
          g.retire(*prev, r, false);
          modify(r, *prev);
        } else {
          modify(r, n);
        }
        created.push_back({n, rec});
        prev = n;
      }
      prev_rec = rec;
      prev_r = r;
    }
    if (prev_rec != nullptr && prev_r < last) {
      g.retire(*prev, prev_r + 1, true);
      modify(prev_r + 1, *prev);
    }
  }

  for (const auto& v : created) {
    const Revision r = g.node(v.node).revision;
    for (const auto& callee : v.record->callees) {
      if (auto target = g.live_at(NodeKind::kMethod, callee, r)) g.add_edge(EdgeKind::kCall, v.node, *target);
    }
  }

  for (const auto& [cid, reports] : fixes) {
    for (const auto& rid : reports) {
      if (!known_reports.contains(rid)) throw UnresolvedReferenceError("commit " + cid + " fixes unknown report " + rid);
      g.add_edge(EdgeKind::kFix, commit_node.at(cid), detail::report_node(g, rid));
    }
  }
  g.set_revision(last);
  return g;
}

inline RevisionGraph build_graph(const Corpus& corpus) { return build_graph(corpus.snapshots); }

/// Replays a history revision by revision through apply_revision.
inline RevisionGraph build_graph_incrementally(const std::vector<CorpusSnapshot>& snapshots) {
  RevisionGraph g;
  const CorpusSnapshot* prev = nullptr;
  for (const auto& s : snapshots) {
    std::vector<MethodChange> changes;
    if (prev == nullptr) {
      for (const auto& m : s.methods) changes.push_back({m.id, ChangeKind::kAddition});
    } else {
      changes = diff_revisions(*prev, s);
    }
    apply_revision(g, changes, s);
    prev = &s;
  }
  return g;
}

/// Applies every snapshot newer than the graph's revision.
inline void update_graph(RevisionGraph& g, const Corpus& corpus) {
  if (g.empty()) {
    g = build_graph(corpus);
    return;
  }
  if (g.revision() > corpus.latest_revision()) {
    throw RevisionOrderError("graph is at revision " + std::to_string(g.revision()) + " but the corpus ends at revision " +
                             std::to_string(corpus.latest_revision()));
  }
  for (Revision r = g.revision() + 1; r <= corpus.latest_revision(); ++r) {
    apply_revision(g, diff_revisions(corpus.snapshot(r - 1), corpus.snapshot(r)), corpus.snapshot(r));
  }
}

// ---------------------------------------------------------------------------
// Persistence. Line-oriented:
//
//   revloc-graph 1
//   revision <r>
//   nodes <n>
//   N <kind> <revision> <retired_at> <deleted:0|1> <time> <key>
//   edges <m>
//   E <kind> <from> <to> <weight>
//
// The key runs to the end of the line with '\\' and newlines escaped.

namespace detail {

inline std::string escape_key(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else if (c == '\r') out += "\\r";
    else out += c;
  }
  return out;
}

inline std::string unescape_key(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      out += s[i] == 'n' ? '\n' : s[i] == 'r' ? '\r' : s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_graph(std::ostream& out, const RevisionGraph& g) {
  out << "revloc-graph 1\n";
  out << "revision " << g.revision() << '\n';
  out << "nodes " << g.nodes().size() << '\n';
  for (const auto& n : g.nodes()) {
    out << "N " << to_string(n.kind) << ' ' << n.revision << ' ' << n.retired_at << ' ' << (n.deleted ? 1 : 0) << ' '
        << n.time << ' ' << detail::escape_key(n.key) << '\n';
  }
  out << "edges " << g.edges().size() << '\n';
  for (const auto& e : g.edges()) {
    out << "E " << to_string(e.kind) << ' ' << e.from << ' ' << e.to << ' ' << detail::format_double(e.weight) << '\n';
  }
}

inline RevisionGraph load_graph(std::istream& in) {
  RevisionGraph g;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("graph store line " + std::to_string(line_no) + ": " + why);
  };
  auto next = [&]() {
    if (!std::getline(in, line)) throw fail("unexpected end of file");
    ++line_no;
  };
  next();
  if (line != "revloc-graph 1") throw fail("not a revloc graph store (bad header)");
  next();
  Revision revision = 0;
  if (std::sscanf(line.c_str(), "revision %d", &revision) != 1) throw fail("expected 'revision <r>'");
  next();
  std::size_t n_nodes = 0;
  if (std::sscanf(line.c_str(), "nodes %zu", &n_nodes) != 1) throw fail("expected 'nodes <n>'");
  for (std::size_t i = 0; i < n_nodes; ++i) {
    next();
    std::istringstream ls(line);
    std::string tag, kind;
    Node n;
    int deleted = 0;
    if (!(ls >> tag >> kind >> n.revision >> n.retired_at >> deleted >> n.time) || tag != "N") {
      throw fail("malformed node record");
    }
    try {
      n.kind = parse_node_kind(kind);
    } catch (const FormatError& e) {
      throw fail(e.what());
    }
    n.deleted = deleted != 0;
    std::string rest;
    std::getline(ls, rest);
    if (rest.empty() || rest[0] != ' ') throw fail("missing node key");
    n.key = detail::unescape_key(std::string_view(rest).substr(1));
    try {
      g.add_node(std::move(n));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  next();
  std::size_t n_edges = 0;
  if (std::sscanf(line.c_str(), "edges %zu", &n_edges) != 1) throw fail("expected 'edges <m>'");
  for (std::size_t i = 0; i < n_edges; ++i) {
    next();
    std::istringstream ls(line);
    std::string tag, kind, weight;
    std::size_t from = 0, to = 0;
    if (!(ls >> tag >> kind >> from >> to >> weight) || tag != "E") throw fail("malformed edge record");
    if (from >= g.nodes().size() || to >= g.nodes().size()) throw fail("edge references a missing node");
    try {
      g.add_edge(parse_edge_kind(kind), from, to, std::stod(weight));
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  g.set_revision(revision);
  return g;
}

}  // namespace revloc

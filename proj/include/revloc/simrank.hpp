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
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "revloc/error.hpp"
#include "revloc/graph.hpp"

namespace revloc {

struct SimRankConfig {
  double decay = 0.8;
  int iterations = 5;
  double emit_threshold = 0.001;

  void validate() const {
    if (!(decay > 0.0 && decay < 1.0)) throw ArgumentError("SimRank decay must lie in (0, 1)");
    if (iterations < 1) throw ArgumentError("SimRank needs at least one iteration");
    if (!(emit_threshold >= 0.0)) throw ArgumentError("SimRank emit threshold must be >= 0");
  }
};

/// One commit fixing one report, with the method ids the commit modified.
struct FixEvent {
  std::string report;
  Timestamp report_time = 0;
  std::string commit;
  Timestamp commit_time = 0;
  std::set<std::string> methods;
};

/// Fix relations read off a revision graph, ordered by (commit time, report).
struct FixHistory {
  std::vector<FixEvent> events;

  /// Events whose commit happened strictly before `cutoff`.
  FixHistory before(Timestamp cutoff) const {
    FixHistory h;
    for (const auto& e : events)
      if (e.commit_time < cutoff) h.events.push_back(e);
    return h;
  }
};

inline FixHistory fix_history(const RevisionGraph& g) {
  FixHistory h;
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const Node& commit = g.node(i);
    if (commit.kind != NodeKind::kCommit) continue;
    std::set<std::string> modified;
    std::vector<std::size_t> reports;
    for (auto ei : g.out_edges(i)) {
      const Edge& e = g.edges()[ei];
      if (e.kind == EdgeKind::kModify) modified.insert(g.node(e.to).key);
      if (e.kind == EdgeKind::kFix) reports.push_back(e.to);
    }
    for (auto r : reports) {
      h.events.push_back({g.node(r).key, g.node(r).time, commit.key, commit.time, modified});
    }
  }
  std::sort(h.events.begin(), h.events.end(), [](const FixEvent& a, const FixEvent& b) {
    return std::tie(a.commit_time, a.report, a.commit) < std::tie(b.commit_time, b.report, b.commit);
  });
  return h;
}

/// Report <-> method bipartite structure: M(b) and B(m).
struct FixBipartite {
  std::vector<std::string> reports;                 // sorted
  std::vector<std::string> methods;                 // sorted
  std::vector<std::vector<std::size_t>> report_methods;  // M(b), indices into methods
  std::vector<std::vector<std::size_t>> method_reports;  // B(m), indices into reports

  static FixBipartite from(const FixHistory& h) {
    std::map<std::string, std::set<std::string>> m_of_b;
    for (const auto& e : h.events) m_of_b[e.report].insert(e.methods.begin(), e.methods.end());
    std::set<std::string> all_methods;
    for (const auto& [b, ms] : m_of_b) all_methods.insert(ms.begin(), ms.end());
    FixBipartite fb;
    fb.methods.assign(all_methods.begin(), all_methods.end());
    std::map<std::string, std::size_t> midx;
    for (std::size_t i = 0; i < fb.methods.size(); ++i) midx[fb.methods[i]] = i;
    fb.method_reports.resize(fb.methods.size());
    for (const auto& [b, ms] : m_of_b) {
      if (ms.empty()) continue;
      const std::size_t bi = fb.reports.size();
      fb.reports.push_back(b);
      auto& row = fb.report_methods.emplace_back();
      for (const auto& m : ms) {
        row.push_back(midx.at(m));
        fb.method_reports[midx.at(m)].push_back(bi);
      }
    }
    return fb;
  }

  /// Methods modified by each report, keyed by report id.
  std::map<std::string, std::set<std::string>> modified_by() const {
    std::map<std::string, std::set<std::string>> out;
    for (std::size_t b = 0; b < reports.size(); ++b)
      for (auto m : report_methods[b]) out[reports[b]].insert(methods[m]);
    return out;
  }
};

/// Sparse symmetric similarity scores for report pairs (S^b) and method pairs
/// (S^m). Self-similarity is implicitly 1 and never stored.
class SimilarityStore {
 public:
  using Row = std::map<std::string, double>;

  double report_score(const std::string& a, const std::string& b) const { return lookup(reports_, a, b); }
  double method_score(const std::string& a, const std::string& b) const { return lookup(methods_, a, b); }

  void set_report_score(const std::string& a, const std::string& b, double v) { store(reports_, a, b, v); }
  void set_method_score(const std::string& a, const std::string& b, double v) { store(methods_, a, b, v); }

  const Row& similar_reports(const std::string& a) const { return row(reports_, a); }
  const Row& similar_methods(const std::string& a) const { return row(methods_, a); }

  /// Methods similar to `a`, highest score first, ties by id.
  std::vector<std::pair<std::string, double>> ranked_similar_methods(const std::string& a) const {
    const Row& r = row(methods_, a);
    std::vector<std::pair<std::string, double>> out(r.begin(), r.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    return out;
  }

  std::size_t report_pairs() const { return count(reports_); }
  std::size_t method_pairs() const { return count(methods_); }

  const std::map<std::string, Row>& report_rows() const { return reports_; }
  const std::map<std::string, Row>& method_rows() const { return methods_; }

 private:
  static double lookup(const std::map<std::string, Row>& m, const std::string& a, const std::string& b) {
    if (a == b) return 1.0;
    auto it = m.find(a);
    if (it == m.end()) return 0.0;
    auto jt = it->second.find(b);
    return jt == it->second.end() ? 0.0 : jt->second;
  }
  static void store(std::map<std::string, Row>& m, const std::string& a, const std::string& b, double v) {
    if (a == b) return;
    m[a][b] = v;
    m[b][a] = v;
  }
  static const Row& row(const std::map<std::string, Row>& m, const std::string& a) {
    static const Row kEmpty;
    auto it = m.find(a);
    return it == m.end() ? kEmpty : it->second;
  }
  static std::size_t count(const std::map<std::string, Row>& m) {
    std::size_t n = 0;
    for (const auto& [k, r] : m) n += r.size();
    return n / 2;
  }

  std::map<std::string, Row> reports_;
  std::map<std::string, Row> methods_;
};

/// Dense SimRank state, exposed for tests that inspect individual sweeps.
struct SimRankMatrices {
  std::size_t n_reports = 0;
  std::size_t n_methods = 0;
  std::vector<double> reports;  // row-major n_reports x n_reports
  std::vector<double> methods;  // row-major n_methods x n_methods
};

/// Runs `cfg.iterations` rounds; each round updates report scores from the
/// method scores and then method scores from the fresh report scores.
/// Diagonals stay 1; a pair with an empty neighbor set stays 0.
inline SimRankMatrices simrank_matrices(const FixBipartite& fb, const SimRankConfig& cfg) {
  cfg.validate();
  SimRankMatrices s;
  s.n_reports = fb.reports.size();
  s.n_methods = fb.methods.size();
  const std::size_t nb = s.n_reports;
  const std::size_t nm = s.n_methods;
  s.reports.assign(nb * nb, 0.0);
  s.methods.assign(nm * nm, 0.0);
  for (std::size_t i = 0; i < nb; ++i) s.reports[i * nb + i] = 1.0;
  for (std::size_t i = 0; i < nm; ++i) s.methods[i * nm + i] = 1.0;

  std::vector<double> partial;
  // One half-sweep: target(i,j) = C/(|N_i||N_j|) sum_{k in N_i, l in N_j} source(k,l).
  auto sweep = [&](const std::vector<std::vector<std::size_t>>& nbrs, std::size_t n_target,
                   const std::vector<double>& source, std::size_t n_source, std::vector<double>& target) {
    partial.assign(n_target * n_source, 0.0);
    for (std::size_t i = 0; i < n_target; ++i) {
      double* row = &partial[i * n_source];
      for (auto k : nbrs[i]) {
        const double* src = &source[k * n_source];
        for (std::size_t l = 0; l < n_source; ++l) row[l] += src[l];
      }
    }
    for (std::size_t i = 0; i < n_target; ++i) {
      for (std::size_t j = i + 1; j < n_target; ++j) {
        double v = 0.0;
        if (!nbrs[i].empty() && !nbrs[j].empty()) {
          double sum = 0.0;
          for (auto l : nbrs[j]) sum += partial[i * n_source + l];
          v = cfg.decay * sum / (static_cast<double>(nbrs[i].size()) * static_cast<double>(nbrs[j].size()));
        }
        target[i * n_target + j] = v;
        target[j * n_target + i] = v;
      }
    }
  };
  for (int it = 0; it < cfg.iterations; ++it) {
    sweep(fb.report_methods, nb, s.methods, nm, s.reports);
    sweep(fb.method_reports, nm, s.reports, nb, s.methods);
  }
  return s;
}

inline SimilarityStore simrank(const FixBipartite& fb, const SimRankConfig& cfg) {
  const auto s = simrank_matrices(fb, cfg);
  SimilarityStore store;
  for (std::size_t i = 0; i < s.n_reports; ++i)
    for (std::size_t j = i + 1; j < s.n_reports; ++j)
      if (s.reports[i * s.n_reports + j] > cfg.emit_threshold)
        store.set_report_score(fb.reports[i], fb.reports[j], s.reports[i * s.n_reports + j]);
  for (std::size_t i = 0; i < s.n_methods; ++i)
    for (std::size_t j = i + 1; j < s.n_methods; ++j)
      if (s.methods[i * s.n_methods + j] > cfg.emit_threshold)
        store.set_method_score(fb.methods[i], fb.methods[j], s.methods[i * s.n_methods + j]);
  return store;
}

/// SimRank over every fix relation recorded in the graph.
inline SimilarityStore simrank(const RevisionGraph& graph, const SimRankConfig& cfg) {
  return simrank(FixBipartite::from(fix_history(graph)), cfg);
}

/// Writes similar-to edges between the latest nodes of similar entities,
/// replacing any previous ones.
inline void attach_similarity(RevisionGraph& graph, const SimilarityStore& store) {
  graph.clear_edges(EdgeKind::kSimilarTo);
  auto attach = [&](NodeKind kind, const std::map<std::string, SimilarityStore::Row>& rows) {
    for (const auto& [a, row] : rows) {
      for (const auto& [b, v] : row) {
        if (!(a < b)) continue;
        auto na = graph.latest(kind, a);
        auto nb = graph.latest(kind, b);
        if (na && nb) graph.add_edge(EdgeKind::kSimilarTo, *na, *nb, v);
      }
    }
  };
  attach(NodeKind::kReport, store.report_rows());
  attach(NodeKind::kMethod, store.method_rows());
}

struct NeighborLimits {
  std::size_t max_similar = 8;
  std::size_t max_callees = 8;
};

struct MethodNeighbors {
  std::vector<std::string> similar;  // by descending score
  std::vector<std::string> callees;  // sorted by id

  /// Similar methods first, then callees not already listed.
  std::vector<std::string> relevant() const {
    std::vector<std::string> out = similar;
    for (const auto& c : callees)
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    return out;
  }
  bool empty() const { return similar.empty() && callees.empty(); }
};

/// Relevant methods of `id` as of `revision` (default: the graph's latest).
/// Only methods live at that revision are returned; the method itself never is.
inline MethodNeighbors neighbors(const RevisionGraph& graph, const SimilarityStore& store, const std::string& id,
                                 const NeighborLimits& limits = {}, std::optional<Revision> revision = std::nullopt) {
  const Revision r = revision.value_or(graph.revision());
  if (graph.versions(NodeKind::kMethod, id).empty()) throw UnresolvedReferenceError("unknown method " + id);
  MethodNeighbors out;
  for (const auto& [other, score] : store.ranked_similar_methods(id)) {
    if (out.similar.size() >= limits.max_similar) break;
    if (other != id && graph.live_at(NodeKind::kMethod, other, r)) out.similar.push_back(other);
  }
  auto node = graph.live_at(NodeKind::kMethod, id, r);
  if (!node) node = graph.latest(NodeKind::kMethod, id);
  std::set<std::string> callees;
  for (auto ei : graph.out_edges(*node)) {
    const Edge& e = graph.edges()[ei];
    if (e.kind != EdgeKind::kCall) continue;
    const std::string& target = graph.node(e.to).key;
    if (target != id && graph.live_at(NodeKind::kMethod, target, r)) callees.insert(target);
  }
  for (const auto& c : callees) {
    if (out.callees.size() >= limits.max_callees) break;
    out.callees.push_back(c);
  }
  return out;
}

}  // namespace revloc

#pragma once

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/extract.hpp"
#include "revloc/features.hpp"
#include "revloc/model.hpp"

namespace revloc::fixture {

/// Snapshot whose methods are extracted from the given path -> source map.
inline CorpusSnapshot snapshot_of(Revision r, const std::map<std::string, std::string>& sources) {
  CorpusSnapshot s;
  s.revision = r;
  for (const auto& [path, text] : sources) {
    SourceFile f{path, r, text};
    for (auto& m : extract_methods(f)) {
      m.revision = r;
      s.methods.push_back(std::move(m));
    }
    s.files.push_back({path, r, {}});
  }
  s.sort_methods();
  return s;
}

/// A bare method record; enough for graph and diff fixtures.
inline MethodRecord method(const std::string& path, const std::string& name, Revision r,
                           std::vector<std::string> tokens = {}) {
  MethodRecord m;
  m.path = path;
  m.name = name;
  m.id = path + "::" + name + "()";
  m.revision = r;
  m.tokens = tokens.empty() ? std::vector<std::string>{name} : std::move(tokens);
  return m;
}

/// Random linear history: methods are added, deleted, re-added and modified,
/// files come and go with their methods, commits fix earlier reports.
inline std::vector<CorpusSnapshot> random_history(std::mt19937& rng, int revisions) {
  const std::vector<std::string> paths = {"a/One.java", "a/Two.java", "b/Three.java"};
  std::map<std::string, MethodRecord> live;
  std::vector<CorpusSnapshot> out;
  std::vector<std::string> reports;
  int serial = 0;
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  for (Revision r = 0; r < revisions; ++r) {
    for (auto it = live.begin(); it != live.end();) {
      if (coin(0.15)) {
        it = live.erase(it);
        continue;
      }
      if (coin(0.25)) {
        it->second.tokens.push_back("t" + std::to_string(serial++));
        it->second.revision = r;
      }
      ++it;
    }
    const int adds = static_cast<int>(rng() % 4);
    for (int i = 0; i < adds; ++i) {
      const auto& path = paths[rng() % paths.size()];
      auto m = method(path, "m" + std::to_string(rng() % 8), r, {"x" + std::to_string(serial++)});
      if (!live.contains(m.id)) live.emplace(m.id, m);
    }
    std::vector<std::string> ids;
    for (const auto& [id, m] : live) ids.push_back(id);
    CorpusSnapshot s;
    s.revision = r;
    for (auto& [id, m] : live) {
      if (m.revision == r) {
        m.callees.clear();
        for (int k = static_cast<int>(rng() % 3); k > 0 && !ids.empty(); --k) m.callees.insert(ids[rng() % ids.size()]);
        if (coin(0.2)) m.callees.insert("a/One.java::ghost()");
      }
      s.methods.push_back(m);
    }
    std::set<std::string> present;
    for (const auto& m : s.methods) present.insert(m.path);
    for (const auto& p : present) s.files.push_back({p, r, {}});
    if (coin(0.4)) {
      BugReportRecord b;
      b.id = std::to_string(100 + r);
      b.created_at = 1000 * r + 10;
      b.tokens = {"bug"};
      s.reports.push_back(b);
      reports.push_back(b.id);
    }
    if (r == 0 || coin(0.8)) {
      CommitRecord c;
      c.id = "c" + std::to_string(r);
      c.timestamp = 1000 * r + 500;
      c.revision = r;
      if (!reports.empty() && coin(0.5)) c.fixes.push_back(reports[rng() % reports.size()]);
      s.commits.push_back(c);
    }
    s.sort_methods();
    out.push_back(std::move(s));
  }
  return out;
}

inline std::map<std::string, const BugReportRecord*> report_index(const std::vector<BugReportRecord>& rs) {
  std::map<std::string, const BugReportRecord*> out;
  for (const auto& r : rs) out[r.id] = &r;
  return out;
}

/// One report per fix event, with a few random words.
inline std::vector<BugReportRecord> random_reports(std::mt19937& rng, const FixHistory& h) {
  const std::vector<std::string> vocab{"null", "crash", "save", "load", "file", "open", "menu", "icon", "slow"};
  std::vector<BugReportRecord> out;
  for (const auto& e : h.events) {
    BugReportRecord r;
    r.id = e.report;
    r.created_at = e.report_time;
    for (int k = 1 + static_cast<int>(rng() % 5); k > 0; --k) r.tokens.push_back(vocab[rng() % vocab.size()]);
    out.push_back(r);
  }
  return out;
}

// Random method/report instance for end-to-end checks.
struct Instance {
  EncodedMethod method;
  std::vector<EncodedMethod> neighbors;
  EncodedReport report;
  FixingFeatures features;
  int label = 0;
};

inline Instance random_instance(std::mt19937_64& rng, int vocab) {
  std::uniform_int_distribution<int> id(0, vocab - 1), len(0, 6), n_neighbors(1, 2);
  auto seq = [&](bool nonempty) {
    std::vector<int> s(static_cast<std::size_t>(nonempty ? 1 + len(rng) % 6 : len(rng)));
    for (auto& x : s) x = id(rng);
    return s;
  };
  auto method = [&] {
    EncodedMethod m{seq(true), seq(false), seq(false), true};
    return m;
  };
  Instance in;
  in.method = method();
  for (int i = n_neighbors(rng); i > 0; --i) in.neighbors.push_back(method());
  in.report = seq(true);
  std::uniform_real_distribution<double> u(0, 1);
  in.features = {u(rng), std::floor(4 * u(rng)), u(rng)};
  in.label = static_cast<int>(rng() % 2);
  return in;
}

inline Var instance_loss(nn::Tape& t, const Weights& w, const ModelConfig& cfg, const Instance& in) {
  std::vector<const EncodedMethod*> ns;
  for (const auto& n : in.neighbors) ns.push_back(&n);
  const Var r = embed_report(t, w, in.report);
  return t.nll_softmax(instance_logits(t, w, cfg, in.method, ns, r, in.features), logit_index(in.label));
}

}  // namespace revloc::fixture

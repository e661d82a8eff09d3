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
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"
#include "revloc/graph.hpp"
#include "revloc/simrank.hpp"

namespace revloc {

/// TF-IDF weighting with raw term counts and smoothed inverse document
/// frequency idf(t) = ln((1 + N) / (1 + df(t))) + 1, so every term carries a
/// positive weight and identical nonempty documents have cosine 1.
class TfIdfModel {
 public:
  using SparseVector = std::map<std::string, double>;

  TfIdfModel() = default;

  template <class Docs>
  explicit TfIdfModel(const Docs& docs) {
    for (const auto& doc : docs) add_document(doc);
  }

  void add_document(const std::vector<std::string>& tokens) {
    ++n_docs_;
    const std::set<std::string> uniq(tokens.begin(), tokens.end());
    for (const auto& t : uniq) ++df_[t];
  }

  std::size_t documents() const { return n_docs_; }

  double idf(const std::string& term) const {
    auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + df)) + 1.0;
  }

  SparseVector vectorize(const std::vector<std::string>& tokens) const {
    SparseVector v;
    for (const auto& t : tokens) v[t] += 1.0;
    for (auto& [t, w] : v) w *= idf(t);
    return v;
  }

  static double cosine(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, w] : a) {
      na += w * w;
      auto it = b.find(t);
      if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [t, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
  }

  double cos_sim(const std::vector<std::string>& a, const std::vector<std::string>& b) const {
    return cosine(vectorize(a), vectorize(b));
  }

 private:
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t n_docs_ = 0;
};

struct FixingFeatures {
  double rcfs = 0.0;
  double bffs = 0.0;
  double bfrs = 0.0;
  friend bool operator==(const FixingFeatures&, const FixingFeatures&) = default;
};

/// A report fixed before the query report was filed.
struct PriorReport {
  std::string id;
  Timestamp created_at = 0;
  Timestamp fixed_at = 0;
  std::set<std::string> methods;  // M_b: method ids its fix modified
  std::vector<std::string> tokens;
};

/// Everything feature computation may read for one query: history strictly
/// before the query timestamp and the candidate methods of its revision.
struct HistoryContext {
  Timestamp query_time = 0;
  std::vector<PriorReport> previous;  // B_prev, ordered by created_at
  SimilarityStore similarity;
  std::set<std::string> candidates;
  TfIdfModel tfidf;  // document frequencies over B_prev only
};

inline constexpr Timestamp kSecondsPerMonth = 30LL * 24 * 3600;

/// Builds the history context for a query report at `query_time`. Only fix
/// commits strictly older than the query contribute; SimRank runs over them.
inline HistoryContext make_history_context(const FixHistory& history, const std::map<std::string, const BugReportRecord*>& reports,
                                           Timestamp query_time, std::set<std::string> candidates,
                                           const SimRankConfig& cfg) {
  HistoryContext ctx;
  ctx.query_time = query_time;
  ctx.candidates = std::move(candidates);
  const FixHistory past = history.before(query_time);
  std::map<std::string, PriorReport> prior;
  for (const auto& e : past.events) {
    auto [it, fresh] = prior.try_emplace(e.report);
    PriorReport& p = it->second;
    if (fresh) {
      p.id = e.report;
      p.created_at = e.report_time;
      p.fixed_at = e.commit_time;
      auto rec = reports.find(e.report);
      if (rec != reports.end()) p.tokens = rec->second->tokens;
    }
    p.fixed_at = std::min(p.fixed_at, e.commit_time);
    p.methods.insert(e.methods.begin(), e.methods.end());
  }
  for (auto& [id, p] : prior) ctx.previous.push_back(std::move(p));
  std::sort(ctx.previous.begin(), ctx.previous.end(), [](const PriorReport& a, const PriorReport& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  for (const auto& p : ctx.previous) ctx.tfidf.add_document(p.tokens);
  ctx.similarity = simrank(FixBipartite::from(past), cfg);
  return ctx;
}

/// Revised collaborative filtering score given the textual similarity of the
/// new report to each previous report (`cos`, keyed by report id).
///
/// Step 1 revises report-to-report relevance with S^b, step 2 spreads it over
/// the methods each previous report modified, step 3 revises the per-method
/// score with S^m. The sums run over stored similar-to pairs, i.e. j != i.
inline std::map<std::string, double> rcfs_from_cosines(const std::map<std::string, double>& cos,
                                                       std::span<const std::string> methods, const HistoryContext& ctx) {
  for (const auto& m : methods) {
    if (!ctx.candidates.contains(m)) throw UnresolvedReferenceError("method " + m + " is not in the report's revision");
  }
  auto cos_of = [&cos](const std::string& b) {
    auto it = cos.find(b);
    return it == cos.end() ? 0.0 : it->second;
  };
  // Step 1.
  std::map<std::string, double> s_new;
  for (const auto& p : ctx.previous) {
    double s = cos_of(p.id);
    for (const auto& [other, score] : ctx.similarity.similar_reports(p.id)) s += score * cos_of(other);
    s_new[p.id] = s;
  }
  // Step 2.
  std::map<std::string, double> cfs;
  for (const auto& p : ctx.previous) {
    if (p.methods.empty()) continue;
    const double share = s_new.at(p.id) / static_cast<double>(p.methods.size());
    for (const auto& m : p.methods) cfs[m] += share;
  }
  auto cfs_of = [&cfs](const std::string& m) {
    auto it = cfs.find(m);
    return it == cfs.end() ? 0.0 : it->second;
  };
  // Step 3.
  const std::set<std::string> pool(methods.begin(), methods.end());
  std::map<std::string, double> out;
  for (const auto& m : methods) {
    double v = cfs_of(m);
    for (const auto& [other, score] : ctx.similarity.similar_methods(m)) {
      if (pool.contains(other)) v += cfs_of(other) * score;
    }
    out[m] = v;
  }
  return out;
}

/// TF-IDF cosine of the new report against every report in B_prev.
inline std::map<std::string, double> history_cosines(const std::vector<std::string>& report_tokens,
                                                     const HistoryContext& ctx) {
  const auto query = ctx.tfidf.vectorize(report_tokens);
  std::map<std::string, double> cos;
  for (const auto& p : ctx.previous) cos[p.id] = TfIdfModel::cosine(ctx.tfidf.vectorize(p.tokens), query);
  return cos;
}

inline std::map<std::string, double> rcfs(const std::vector<std::string>& report_tokens,
                                          std::span<const std::string> methods, const HistoryContext& ctx) {
  return rcfs_from_cosines(history_cosines(report_tokens, ctx), methods, ctx);
}

/// Recency: 1 / (k + 1) with k the whole 30-day months since the most recent
/// earlier report whose fix touched the method; 0 if there is none.
inline double bfrs(const std::string& method, const HistoryContext& ctx) {
  std::optional<Timestamp> last;
  for (const auto& p : ctx.previous) {
    if (p.methods.contains(method) && (!last || p.created_at > *last)) last = p.created_at;
  }
  if (!last) return 0.0;
  const Timestamp gap = std::max<Timestamp>(0, ctx.query_time - *last);
  const auto k = static_cast<double>(gap / kSecondsPerMonth);
  return 1.0 / (k + 1.0);
}

/// Frequency: number of earlier reports whose fix touched the method.
inline double bffs(const std::string& method, const HistoryContext& ctx) {
  double n = 0.0;
  for (const auto& p : ctx.previous)
    if (p.methods.contains(method)) n += 1.0;
  return n;
}

inline std::vector<FixingFeatures> fixing_features(const std::vector<std::string>& report_tokens,
                                                   std::span<const std::string> methods, const HistoryContext& ctx) {
  const auto cf = rcfs(report_tokens, methods, ctx);
  std::vector<FixingFeatures> out;
  out.reserve(methods.size());
  for (const auto& m : methods) out.push_back({cf.at(m), bffs(m, ctx), bfrs(m, ctx)});
  return out;
}

struct FeatureRow {
  std::string report;
  std::string method;
  FixingFeatures features;
};

/// Tab-separated feature dump, values to 9 decimal places.
inline void write_feature_rows(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "report\tmethod\trcfs\tbffs\tbfrs\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9f\t%.9f\t%.9f", r.features.rcfs, r.features.bffs, r.features.bfrs);
    out << r.report << '\t' << r.method << '\t' << buf << '\n';
  }
}

}  // namespace revloc

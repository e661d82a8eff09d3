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
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/features.hpp"
#include "revloc/graph.hpp"
#include "revloc/model.hpp"
#include "revloc/simrank.hpp"

namespace revloc {

/// Everything needed to rank methods for one report: the candidates of its
/// before-fix revision with their bug-fixing features and relevant methods.
struct RankingQuery {
  const BugReportRecord* report = nullptr;
  Revision revision = 0;                               // before-fix revision
  std::vector<const MethodRecord*> candidates;         // live methods with text, by id
  std::vector<FixingFeatures> features;                // aligned with candidates
  std::vector<std::vector<std::uint32_t>> neighbors;   // relevant candidates of short methods
  std::vector<std::uint8_t> truth;                     // 1 where the fix modified the method

  std::size_t positives() const { return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1)); }
  std::set<std::string> truth_ids() const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (truth[i]) out.insert(candidates[i]->id);
    return out;
  }
};

/// Revision produced by the earliest commit fixing each report.
inline std::map<std::string, Revision> first_fix_revision(const Corpus& corpus) {
  std::map<std::string, Revision> out;
  for (const CommitRecord* c : corpus.commits()) {
    for (const auto& rid : c->fixes) {
      auto [it, fresh] = out.emplace(rid, c->revision);
      if (!fresh) it->second = std::min(it->second, c->revision);
    }
  }
  return out;
}

struct QueryOptions {
  SimRankConfig simrank;
  NeighborLimits limits;
  int short_threshold = 5;
};

/// Builds the ranking problem of `report` at revision `revision` using only
/// fix history older than the report.
inline RankingQuery build_query(const Corpus& corpus, const RevisionGraph& graph, const FixHistory& history,
                                const std::map<std::string, const BugReportRecord*>& reports,
                                const BugReportRecord& report, Revision revision, const QueryOptions& opt) {
  const CorpusSnapshot& snap = corpus.snapshot(revision);
  RankingQuery q;
  q.report = &report;
  q.revision = revision;
  std::set<std::string> ids;
  for (const auto& m : snap.methods) {
    if (m.empty_views()) continue;  // nothing to embed
    q.candidates.push_back(&m);
    ids.insert(m.id);
  }
  const HistoryContext ctx = make_history_context(history, reports, report.created_at, ids, opt.simrank);
  std::vector<std::string> id_list;
  id_list.reserve(q.candidates.size());
  for (const auto* m : q.candidates) id_list.push_back(m->id);
  q.features = fixing_features(report.tokens, id_list, ctx);

  std::unordered_map<std::string, std::uint32_t> index;
  for (std::uint32_t i = 0; i < q.candidates.size(); ++i) index.emplace(q.candidates[i]->id, i);
  q.neighbors.resize(q.candidates.size());
  for (std::uint32_t i = 0; i < q.candidates.size(); ++i) {
    if (q.candidates[i]->statement_count >= opt.short_threshold) continue;
    for (const auto& n : neighbors(graph, ctx.similarity, q.candidates[i]->id, opt.limits, revision).relevant()) {
      auto it = index.find(n);
      if (it != index.end()) q.neighbors[i].push_back(it->second);
    }
  }
  q.truth.resize(q.candidates.size());
  for (std::size_t i = 0; i < q.candidates.size(); ++i) q.truth[i] = report.fixed_methods.contains(q.candidates[i]->id);
  return q;
}

/// One query per report that has a fix commit with a predecessor revision,
/// in corpus report order.
inline std::vector<RankingQuery> build_queries(const Corpus& corpus, const RevisionGraph& graph, const QueryOptions& opt,
                                               std::vector<std::string>* skipped = nullptr) {
  const FixHistory history = fix_history(graph);
  std::map<std::string, const BugReportRecord*> reports;
  for (const auto* r : corpus.reports()) reports[r->id] = r;
  const auto fixed_at = first_fix_revision(corpus);
  std::vector<RankingQuery> out;
  for (const auto* r : corpus.reports()) {
    auto it = fixed_at.find(r->id);
    if (it == fixed_at.end() || it->second < 1) {
      if (skipped) skipped->push_back(r->id);
      continue;
    }
    out.push_back(build_query(corpus, graph, history, reports, *r, it->second - 1, opt));
  }
  return out;
}

inline QueryOptions query_options(const ModelConfig& cfg, const SimRankConfig& sim) {
  return {sim, {cfg.max_similar, cfg.max_callees}, cfg.short_threshold};
}

/// Shared vocabulary: every method token of the corpus plus the training
/// reports' tokens.
inline Vocabulary build_vocabulary(const Corpus& corpus, std::span<const RankingQuery* const> training) {
  std::set<std::string> words;
  for (const auto& s : corpus.snapshots) {
    for (const auto& m : s.methods) {
      words.insert(m.tokens.begin(), m.tokens.end());
      words.insert(m.api_calls.begin(), m.api_calls.end());
      words.insert(m.comment.begin(), m.comment.end());
    }
  }
  for (const auto* q : training) words.insert(q->report->tokens.begin(), q->report->tokens.end());
  return Vocabulary::from_words(words);
}

/// Encodes method records once per model.
class EncodingCache {
 public:
  explicit EncodingCache(const Model& m) : model_(m) {}
  const EncodedMethod& operator()(const MethodRecord* m) {
    auto it = cache_.find(m);
    if (it == cache_.end()) it = cache_.emplace(m, model_.encode(*m)).first;
    return it->second;
  }

 private:
  const Model& model_;
  std::unordered_map<const MethodRecord*, EncodedMethod> cache_;
};

struct TrainingInstance {
  std::uint32_t query;
  std::uint32_t method;
  int label;
};

/// Positives plus up to `negatives` distinct non-fixed candidates drawn
/// uniformly with a seeded partial shuffle.
inline std::vector<TrainingInstance> sample_instances(std::span<const RankingQuery* const> queries, std::size_t negatives,
                                                      std::uint64_t seed, std::vector<std::string>* skipped = nullptr) {
  std::vector<TrainingInstance> out;
  std::mt19937_64 rng(seed);
  for (std::uint32_t qi = 0; qi < queries.size(); ++qi) {
    const RankingQuery& q = *queries[qi];
    if (q.positives() == 0) {
      if (skipped) skipped->push_back(q.report->id);
      continue;
    }
    std::vector<std::uint32_t> pool;
    for (std::uint32_t i = 0; i < q.candidates.size(); ++i) {
      if (q.truth[i]) out.push_back({qi, i, 1});
      else pool.push_back(i);
    }
    const std::size_t k = std::min(negatives, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      out.push_back({qi, pool[i], 0});
    }
  }
  return out;
}

/// Records the loss of one instance on the tape.
inline Var instance_loss(Tape& t, const Weights& w, const Model& model, EncodingCache& enc, const RankingQuery& q,
                         std::uint32_t method, int label) {
  const Var r = embed_report(t, w, model.encode(*q.report));
  std::vector<const EncodedMethod*> nbrs;
  for (auto n : q.neighbors[method]) nbrs.push_back(&enc(q.candidates[n]));
  const Var logits = instance_logits(t, w, model.config, enc(q.candidates[method]), nbrs, r, q.features[method]);
  return t.nll_softmax(logits, logit_index(label));
}

struct TrainResult {
  Model model;
  std::vector<double> loss_curve;  // mean instance loss per epoch
  std::size_t instances = 0;
  std::vector<std::string> skipped;  // reports without positives
};

/// SGD over seeded shuffled instances; deterministic for a fixed seed.
inline TrainResult train(const Corpus& corpus, std::span<const RankingQuery* const> queries, const ModelConfig& cfg) {
  cfg.validate();
  TrainResult res{Model::create(cfg, build_vocabulary(corpus, queries)), {}, 0, {}};
  Model& model = res.model;
  auto instances = sample_instances(queries, cfg.negatives, cfg.seed ^ 0x9e3779b97f4a7c15ULL, &res.skipped);
  res.instances = instances.size();
  if (instances.empty()) return res;
  EncodingCache enc(model);
  const Weights w = Weights::of(model.params);
  Tape t;
  model.params.zero_grad();
  std::mt19937_64 rng(cfg.seed + 1);
  std::vector<Var> losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(instances.begin(), instances.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < instances.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(instances.size(), start + cfg.batch_size);
      t.clear();
      losses.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& in = instances[i];
        losses.push_back(instance_loss(t, w, model, enc, *queries[in.query], in.method, in.label));
      }
      const Var loss = t.mean(losses);
      for (Var l : losses) total += t.scalar(l);
      t.backward(loss);
      nn::sgd_step(model.params, cfg.learning_rate, cfg.clip_norm);
    }
    res.loss_curve.push_back(total / static_cast<double>(instances.size()));
  }
  return res;
}

/// Scores candidates with a fixed model. Method view vectors are computed once
/// and reused across queries.
class Ranker {
 public:
  explicit Ranker(Model& model) : model_(model), w_(Weights::of(model.params)), enc_(model) {}

  std::vector<Prediction> rank(const RankingQuery& q) {
    Tape t;
    const auto rv = embed_report(t, w_, model_.encode(*q.report));
    const std::vector<double> r(t.value(rv).begin(), t.value(rv).end());
    std::vector<Prediction> out;
    out.reserve(q.candidates.size());
    for (std::uint32_t i = 0; i < q.candidates.size(); ++i) {
      t.clear();
      const Var rr = t.input(r);
      const EncodedMethod& em = enc_(q.candidates[i]);
      Var s = smnn_fuse(t, w_, views(t, q.candidates[i]), rr);
      if (model_.config.use_menn && em.is_short && !q.neighbors[i].empty()) {
        std::vector<Var> ns;
        for (auto n : q.neighbors[i]) ns.push_back(smnn_fuse(t, w_, views(t, q.candidates[n]), rr));
        s = menn_expand(t, w_, s, ns);
      }
      const Var e = match(t, w_, s, rr);
      const Var logits = flnn_logits(t, w_, e, feature_inputs(q.features[i], model_.config));
      out.push_back({q.candidates[i]->id, positive_probability(t, logits), t.scalar(e), q.features[i]});
    }
    std::stable_sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.method_id < b.method_id;
    });
    return out;
  }

 private:
  ViewVars views(Tape& t, const MethodRecord* m) {
    auto it = cache_.find(m);
    if (it == cache_.end()) {
      Tape scratch;
      const ViewVars v = embed_method(scratch, w_, enc_(m));
      std::array<std::vector<double>, 3> vals;
      for (std::size_t k = 0; k < 3; ++k) {
        const Var x = k == 0 ? v.m : k == 1 ? v.a : v.c;
        vals[k].assign(scratch.value(x).begin(), scratch.value(x).end());
      }
      it = cache_.emplace(m, std::move(vals)).first;
    }
    return {t.input(it->second[0]), t.input(it->second[1]), t.input(it->second[2])};
  }

  Model& model_;
  Weights w_;
  EncodingCache enc_;
  std::unordered_map<const MethodRecord*, std::array<std::vector<double>, 3>> cache_;
};

inline std::vector<Prediction> rank_methods(Model& model, const RankingQuery& q) { return Ranker(model).rank(q); }

}  // namespace revloc

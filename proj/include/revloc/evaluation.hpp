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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revloc/diagnostics.hpp"
#include "revloc/folds.hpp"
#include "revloc/metrics.hpp"
#include "revloc/trainer.hpp"

namespace revloc {

struct TaskOutcome {
  std::string name;
  std::optional<MetricReport> metrics;  // empty when no test report was evaluable
  std::size_t unlinked = 0;             // test reports without a fix commit
  std::size_t filtered = 0;             // test reports dropped by the localization filter
  std::vector<double> loss_curve;
};

struct Evaluation {
  std::vector<TaskOutcome> tasks;
  MetricReport mean;  // metric means over evaluable tasks; reports pooled
};

struct EvalOptions {
  bool not_localized_only = false;
};

inline std::map<std::string, const RankingQuery*> index_queries(const std::vector<RankingQuery>& queries) {
  std::map<std::string, const RankingQuery*> out;
  for (const auto& q : queries) out.emplace(q.report->id, &q);
  return out;
}

/// Ranks every candidate of `q` and returns the truth positions.
inline RankedReport rank_report(Ranker& ranker, const RankingQuery& q) {
  const auto predictions = ranker.rank(q);
  std::vector<std::string> ids;
  ids.reserve(predictions.size());
  for (const auto& p : predictions) ids.push_back(p.method_id);
  return ranks_of(q.report->id, ids, q.truth_ids());
}

/// Trains one model per task and ranks the task's test reports with it.
inline Evaluation evaluate(const Corpus& corpus, const std::vector<RankingQuery>& queries, const FoldPlan& plan,
                           const ModelConfig& cfg, const EvalOptions& opt = {}) {
  const auto by_id = index_queries(queries);
  Evaluation ev;
  std::vector<const MetricReport*> evaluable;
  for (const auto& task : plan.tasks) {
    TaskOutcome out;
    out.name = task.name;
    std::vector<const RankingQuery*> train_set;
    for (const auto& id : task.train) {
      auto it = by_id.find(id);
      if (it != by_id.end()) train_set.push_back(it->second);
    }
    TrainResult trained = train(corpus, train_set, cfg);
    out.loss_curve = trained.loss_curve;
    Ranker ranker(trained.model);
    std::vector<RankedReport> ranked;
    for (const auto& id : task.test) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        ++out.unlinked;
        continue;
      }
      if (opt.not_localized_only && categorize_query(*it->second) != Localization::kNot) {
        ++out.filtered;
        continue;
      }
      ranked.push_back(rank_report(ranker, *it->second));
    }
    const bool any = std::any_of(ranked.begin(), ranked.end(), [](const auto& r) { return !r.truth_ranks.empty(); });
    if (any) out.metrics = evaluate_rankings(std::move(ranked));
    ev.tasks.push_back(std::move(out));
  }
  double n = 0;
  for (const auto& t : ev.tasks) {
    if (!t.metrics) continue;
    const MetricReport& m = *t.metrics;
    ev.mean.top1 += m.top1;
    ev.mean.top5 += m.top5;
    ev.mean.top10 += m.top10;
    ev.mean.map += m.map;
    ev.mean.mrr += m.mrr;
    ev.mean.excluded += m.excluded;
    ev.mean.reports.insert(ev.mean.reports.end(), m.reports.begin(), m.reports.end());
    n += 1;
  }
  if (n == 0) throw EmptyEvaluationError("no task had an evaluable test report");
  for (double* v : {&ev.mean.top1, &ev.mean.top5, &ev.mean.top10, &ev.mean.map, &ev.mean.mrr}) *v /= n;
  return ev;
}

}  // namespace revloc

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
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"

namespace revloc {

enum class FoldMode { kWithinProject, kCrossProject };

struct EvalTask {
  std::string name;
  std::vector<std::string> train;  // report ids, chronological
  std::vector<std::string> test;
};

struct FoldPlan {
  std::vector<std::vector<std::string>> folds;  // empty in cross-project mode
  std::vector<EvalTask> tasks;
};

inline constexpr std::size_t kFolds = 10;
inline constexpr std::size_t kTrainFolds = 3;

/// Within-project: reports sorted by (created_at, id) are cut into 10
/// contiguous folds whose sizes differ by at most one; task i trains on folds
/// i..i+2 and tests on fold i+3. Cross-project: one task per ordered pair of
/// distinct projects, training on all of one and testing on all of the other.
inline FoldPlan plan_folds(std::vector<const BugReportRecord*> reports, FoldMode mode) {
  std::sort(reports.begin(), reports.end(), [](const auto* a, const auto* b) {
    return std::tie(a->created_at, a->id) < std::tie(b->created_at, b->id);
  });
  FoldPlan plan;
  if (mode == FoldMode::kCrossProject) {
    std::map<std::string, std::vector<std::string>> by_project;
    for (const auto* r : reports) by_project[r->project].push_back(r->id);
    if (by_project.size() < 2) throw PlanningError("cross-project evaluation needs at least two projects");
    for (const auto& [x, xs] : by_project)
      for (const auto& [y, ys] : by_project)
        if (x != y) plan.tasks.push_back({x + "->" + y, xs, ys});
    return plan;
  }
  if (reports.size() < kFolds) {
    throw PlanningError("need at least " + std::to_string(kFolds) + " reports for fold planning, got " +
                        std::to_string(reports.size()));
  }
  const std::size_t base = reports.size() / kFolds, extra = reports.size() % kFolds;
  std::size_t next = 0;
  for (std::size_t f = 0; f < kFolds; ++f) {
    auto& fold = plan.folds.emplace_back();
    for (std::size_t i = 0; i < base + (f < extra ? 1 : 0); ++i) fold.push_back(reports[next++]->id);
  }
  for (std::size_t i = 0; i + kTrainFolds < kFolds; ++i) {
    EvalTask t;
    t.name = "task" + std::to_string(i + 1);
    for (std::size_t f = i; f < i + kTrainFolds; ++f) t.train.insert(t.train.end(), plan.folds[f].begin(), plan.folds[f].end());
    t.test = plan.folds[i + kTrainFolds];
    plan.tasks.push_back(std::move(t));
  }
  return plan;
}

}  // namespace revloc

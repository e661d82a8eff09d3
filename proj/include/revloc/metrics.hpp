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
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "revloc/error.hpp"

namespace revloc {

/// 1-based ranks of the truth methods in one ranked list, ascending.
struct RankedReport {
  std::string report_id;
  std::vector<std::size_t> truth_ranks;

  std::size_t frank() const { return truth_ranks.front(); }

  /// (1/|M|) * sum_m m / Rank_m over the sorted truth ranks.
  double average_precision() const {
    double s = 0.0;
    for (std::size_t i = 0; i < truth_ranks.size(); ++i)
      s += static_cast<double>(i + 1) / static_cast<double>(truth_ranks[i]);
    return s / static_cast<double>(truth_ranks.size());
  }
};

/// Positions of `truth` ids in `ranked_ids`; empty when none is ranked.
template <class Ids>
RankedReport ranks_of(std::string report_id, const Ids& ranked_ids, const std::set<std::string>& truth) {
  RankedReport r{std::move(report_id), {}};
  std::size_t pos = 0;
  for (const auto& id : ranked_ids) {
    ++pos;
    if (truth.contains(id)) r.truth_ranks.push_back(pos);
  }
  return r;
}

namespace detail {
inline void check_evaluable(std::span<const RankedReport> reports) {
  if (reports.empty()) throw EmptyEvaluationError("no reports to evaluate");
  for (const auto& r : reports) {
    if (r.truth_ranks.empty()) throw EmptyEvaluationError("report " + r.report_id + " has no ranked truth method");
    if (!std::is_sorted(r.truth_ranks.begin(), r.truth_ranks.end()) || r.truth_ranks.front() < 1)
      throw ArgumentError("report " + r.report_id + ": truth ranks must be ascending and 1-based");
  }
}
}  // namespace detail

/// Percent of reports with a truth method in the top k.
inline double top_at_k(std::span<const RankedReport> reports, std::size_t k) {
  detail::check_evaluable(reports);
  const auto hits = std::count_if(reports.begin(), reports.end(), [k](const auto& r) { return r.frank() <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(reports.size());
}

inline double mean_average_precision(std::span<const RankedReport> reports) {
  detail::check_evaluable(reports);
  double s = 0.0;
  for (const auto& r : reports) s += r.average_precision();
  return s / static_cast<double>(reports.size());
}

/// Mean of 1 / FRank over reports.
inline double mean_reciprocal_rank(std::span<const RankedReport> reports) {
  detail::check_evaluable(reports);
  double s = 0.0;
  for (const auto& r : reports) s += 1.0 / static_cast<double>(r.frank());
  return s / static_cast<double>(reports.size());
}

struct MetricReport {
  double top1 = 0, top5 = 0, top10 = 0;  // percent
  double map = 0, mrr = 0;
  std::vector<RankedReport> reports;
  std::size_t excluded = 0;  // reports whose truth was absent from the candidates
};

/// Metrics over the reports with at least one ranked truth method; the rest
/// are counted as excluded.
inline MetricReport evaluate_rankings(std::vector<RankedReport> all) {
  MetricReport m;
  for (auto& r : all) {
    if (r.truth_ranks.empty()) ++m.excluded;
    else m.reports.push_back(std::move(r));
  }
  m.top1 = top_at_k(m.reports, 1);
  m.top5 = top_at_k(m.reports, 5);
  m.top10 = top_at_k(m.reports, 10);
  m.map = mean_average_precision(m.reports);
  m.mrr = mean_reciprocal_rank(m.reports);
  return m;
}

/// Tab-separated row with 4-decimal values.
inline std::string metric_row(const std::string& label, const MetricReport& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s\t%zu\t%zu\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f", label.c_str(), m.reports.size(),
                m.excluded, m.top1, m.top5, m.top10, m.map, m.mrr);
  return buf;
}
inline constexpr const char* kMetricHeader = "task\treports\texcluded\ttop1\ttop5\ttop10\tmap\tmrr";

inline void print_metric_table(std::ostream& out, std::span<const std::pair<std::string, MetricReport>> rows) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %7s %8s %7s %7s %7s %7s %7s\n", "task", "reports", "excluded", "Top@1",
                "Top@5", "Top@10", "MAP", "MRR");
  out << buf;
  for (const auto& [label, m] : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %7zu %8zu %6.2f%% %6.2f%% %6.2f%% %7.4f %7.4f\n", label.c_str(),
                  m.reports.size(), m.excluded, m.top1, m.top5, m.top10, m.map, m.mrr);
    out << buf;
  }
}

}  // namespace revloc

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
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "revloc/error.hpp"

namespace revloc {

struct SignificanceResult {
  double u = 0.0;  // U of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
  bool significant() const { return p < 0.05; }
};

/// Midranks (1-based) of the pooled sample a ++ b.
inline std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

// Visits every na-subset of `ranks` and counts those whose rank sum is at
// least as far from the mean as `observed`. Handles ties exactly.
inline double exact_two_sided(const std::vector<double>& ranks, std::size_t na, double observed_dev, double mean) {
  const std::size_t n = ranks.size();
  std::vector<std::size_t> pick(na);
  std::iota(pick.begin(), pick.end(), 0);
  std::uint64_t extreme = 0, total = 0;
  const double slack = 1e-9;
  while (true) {
    double s = 0.0;
    for (auto i : pick) s += ranks[i];
    ++total;
    if (std::abs(s - mean) >= observed_dev - slack) ++extreme;
    std::size_t i = na;
    while (i > 0 && pick[i - 1] == n - na + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t k = i; k < na; ++k) pick[k] = pick[k - 1] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace detail

/// Two-sided Mann-Whitney U test. Exact over all rank assignments when the
/// pooled size is at most 16, otherwise the normal approximation with tie and
/// continuity corrections.
inline SignificanceResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("Mann-Whitney U needs two nonempty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double x : pooled)
    if (!std::isfinite(x)) throw ArgumentError("Mann-Whitney U needs finite values");
  const auto ranks = midranks(pooled);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size()), n = na + nb;
  const double ra = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  SignificanceResult res;
  res.u = ra - na * (na + 1.0) / 2.0;
  const double mean_u = na * nb / 2.0;
  if (pooled.size() <= 16) {
    res.exact = true;
    const double mean_r = na * (n + 1.0) / 2.0;
    res.p = detail::exact_two_sided(ranks, a.size(), std::abs(ra - mean_r), mean_r);
    return res;
  }
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) return res;  // every value tied
  const double dev = std::max(0.0, std::abs(res.u - mean_u) - 0.5);
  res.p = std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
  return res;
}

}  // namespace revloc

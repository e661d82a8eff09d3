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
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "revloc/features.hpp"
#include "revloc/tokenize.hpp"
#include "revloc/trainer.hpp"

namespace revloc {

enum class Localization { kFully, kPartially, kNot };

inline const char* to_string(Localization l) {
  switch (l) {
    case Localization::kFully: return "fully";
    case Localization::kPartially: return "partially";
    case Localization::kNot: return "not";
  }
  return "not";
}

/// How many fixed-method simple names the report text mentions, matched
/// case-insensitively as whole identifiers.
inline Localization categorize_report(const std::string& text, const std::set<std::string>& fixed_names) {
  std::set<std::string> words;
  std::string cur;
  for (char c : text + " ") {
    if (detail::is_word_char(c)) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      words.insert(cur);
      cur.clear();
    }
  }
  std::size_t named = 0;
  for (const auto& n : fixed_names) named += words.contains(detail::to_lower(n));
  if (named == 0) return Localization::kNot;
  return named == fixed_names.size() ? Localization::kFully : Localization::kPartially;
}

inline Localization categorize_query(const RankingQuery& q) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < q.candidates.size(); ++i)
    if (q.truth[i]) names.insert(q.candidates[i]->name);
  return categorize_report(q.report->text, names);
}

struct TfIdfGap {
  double fixed = 0.0;       // mean cosine over (report, fixed method) pairs
  double irrelevant = 0.0;  // mean cosine over (report, sampled non-fixed method) pairs
  std::size_t fixed_pairs = 0;
  std::size_t irrelevant_pairs = 0;
};

inline std::vector<std::string> method_document(const MethodRecord& m) {
  std::vector<std::string> doc = m.tokens;
  doc.insert(doc.end(), m.comment.begin(), m.comment.end());
  return doc;
}

/// TF-IDF similarity of reports to their fixed methods versus up to
/// `sample` seeded non-fixed candidates per report. Documents are the reports
/// plus every distinct candidate method.
inline TfIdfGap tfidf_gap(std::span<const RankingQuery> queries, std::size_t sample = 100, std::uint64_t seed = 1) {
  TfIdfModel model;
  std::set<const MethodRecord*> seen;
  for (const auto& q : queries) {
    model.add_document(q.report->tokens);
    for (const auto* m : q.candidates)
      if (seen.insert(m).second) model.add_document(method_document(*m));
  }
  TfIdfGap gap;
  double fixed_sum = 0.0, irrelevant_sum = 0.0;
  std::mt19937_64 rng(seed);
  for (const auto& q : queries) {
    const auto rv = model.vectorize(q.report->tokens);
    std::vector<const MethodRecord*> others;
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
      if (q.truth[i]) {
        fixed_sum += TfIdfModel::cosine(rv, model.vectorize(method_document(*q.candidates[i])));
        ++gap.fixed_pairs;
      } else {
        others.push_back(q.candidates[i]);
      }
    }
    const std::size_t k = std::min(sample, others.size());
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
      std::swap(others[i], others[pick(rng)]);
      irrelevant_sum += TfIdfModel::cosine(rv, model.vectorize(method_document(*others[i])));
      ++gap.irrelevant_pairs;
    }
  }
  if (gap.fixed_pairs) gap.fixed = fixed_sum / static_cast<double>(gap.fixed_pairs);
  if (gap.irrelevant_pairs) gap.irrelevant = irrelevant_sum / static_cast<double>(gap.irrelevant_pairs);
  return gap;
}

}  // namespace revloc

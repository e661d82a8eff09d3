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
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revloc/corpus.hpp"
#include "revloc/corpus_io.hpp"
#include "revloc/error.hpp"

namespace revloc {

/// Generator settings for a corpus with planted lexical and fixing-history
/// signal. Reports belong to topics; each topic owns a few "hot" methods
/// whose identifiers carry the topic's words, and the faulty method of a
/// topic report is drawn from them, favouring the ones fixed more often.
/// Regression reports instead hit a method fixed in the previous month.
struct SynthConfig {
  std::size_t reports = 200;
  std::size_t methods = 300;
  std::size_t files = 30;
  std::size_t topics = 15;
  std::size_t hot_per_topic = 3;
  double regression_rate = 0.15;
  double second_fix_rate = 0.1;
  double mention_rate = 0.5;  // report names the faulty method
  std::size_t topic_words_per_report = 4;
  std::size_t noise_words_per_report = 3;
  std::size_t projects = 1;
  std::uint64_t seed = 1;
  Timestamp start = 1'500'000'000;
  Timestamp report_spacing = 10 * 86'400;
};

struct SynthesisResult {
  std::map<std::string, std::set<std::string>> planted;  // report id -> faulty method ids
  std::size_t revisions = 0;
};

namespace detail {

class WordFactory {
 public:
  explicit WordFactory(std::mt19937_64& rng) : rng_(rng) {}
  std::string next() {
    static constexpr std::string_view kOnset = "bdfgklmnprstvz";
    static constexpr std::string_view kVowel = "aeiou";
    while (true) {
      std::string w;
      const int syllables = 2 + static_cast<int>(rng_() % 2);
      for (int s = 0; s < syllables; ++s) {
        w += kOnset[rng_() % kOnset.size()];
        w += kVowel[rng_() % kVowel.size()];
      }
      if (used_.insert(w).second) return w;
    }
  }
  std::vector<std::string> batch(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

inline std::string capitalize(std::string w) {
  w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

struct SynthMethod {
  std::size_t file = 0;
  std::string name;
  std::vector<std::string> comment;
  std::vector<std::string> statements;
  int topic = -1;
};

}  // namespace detail

/// Writes the corpus as JSONL with full file contents: one initial import at
/// revision 0, then one fix commit per report.
inline SynthesisResult write_synthetic_jsonl(std::ostream& out, const SynthConfig& cfg) {
  if (cfg.reports < 1 || cfg.files < 1 || cfg.topics < 1 || cfg.hot_per_topic < 1 || cfg.projects < 1)
    throw ArgumentError("synthetic corpus needs at least one report, file, topic, hot method and project");
  if (cfg.methods < cfg.topics * cfg.hot_per_topic)
    throw ArgumentError("synthetic corpus needs methods >= topics * hot_per_topic");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&rng](const auto& v) -> const auto& { return v[rng() % v.size()]; };
  detail::WordFactory words(rng);

  const auto generic = words.batch(400);
  const auto verbs = words.batch(40);
  const auto nouns = words.batch(160);
  std::vector<std::vector<std::string>> topic_words(cfg.topics);
  for (auto& t : topic_words) t = words.batch(6);

  auto statement = [&](const std::vector<std::string>* topic) {
    auto w = [&] { return topic && unit(rng) < 0.5 ? pick(*topic) : pick(generic); };
    switch (rng() % 3) {
      case 0: return "int " + w() + " = " + w() + " + " + w() + ";";
      case 1: return w() + " = " + w() + "." + pick(generic) + "(" + w() + ");";
      default: return "if (" + w() + " > " + w() + ") { " + w() + " = " + w() + "; }";
    }
  };

  // Methods, with the first topics * hot_per_topic assigned to topics.
  std::vector<detail::SynthMethod> methods(cfg.methods);
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.methods; ++i) {
    auto& m = methods[i];
    m.topic = i < cfg.topics * cfg.hot_per_topic ? static_cast<int>(i / cfg.hot_per_topic) : -1;
    const auto* topic = m.topic >= 0 ? &topic_words[static_cast<std::size_t>(m.topic)] : nullptr;
    do {
      m.name = pick(verbs) + detail::capitalize(topic ? pick(*topic) : pick(nouns)) + detail::capitalize(pick(nouns));
    } while (!names.insert(m.name).second);
    m.file = rng() % cfg.files;
    for (int k = 0; k < 3; ++k) m.comment.push_back(topic && k == 0 ? pick(*topic) : pick(generic));
    const bool is_short = unit(rng) < 0.35;
    const std::size_t n = is_short ? 1 + rng() % 4 : 5 + rng() % 5;
    for (std::size_t s = 0; s < n; ++s) m.statements.push_back(statement(topic));
  }
  std::vector<std::vector<std::size_t>> by_file(cfg.files);
  for (std::size_t i = 0; i < cfg.methods; ++i) by_file[methods[i].file].push_back(i);
  // Each method calls one other method of its file, when there is one.
  for (auto& group : by_file) {
    for (std::size_t k = 0; k + 1 < group.size(); k += 2) {
      methods[group[k]].statements.push_back(methods[group[k + 1]].name + "(" + pick(generic) + ");");
    }
  }

  auto path_of = [&](std::size_t f) { return "src/synth/pkg" + std::to_string(f % 5) + "/Unit" + std::to_string(f) + ".java"; };
  auto id_of = [&](std::size_t i) {
    return path_of(methods[i].file) + "::" + methods[i].name + "(int arg)";
  };
  auto file_text = [&](std::size_t f) {
    std::ostringstream s;
    s << "class Unit" << f << " {\n";
    for (std::size_t i : by_file[f]) {
      const auto& m = methods[i];
      s << "  /* ";
      for (const auto& c : m.comment) s << c << ' ';
      s << "*/\n  public int " << m.name << "(int arg) {\n";
      for (const auto& st : m.statements) s << "    " << st << '\n';
      s << "    return arg;\n  }\n";
    }
    s << "}\n";
    return s.str();
  };
  auto emit_file = [&](std::size_t f, Revision r) {
    out << nlohmann::json{{"kind", "file"}, {"path", path_of(f)}, {"revision", r}, {"content", file_text(f)}}.dump()
        << '\n';
  };

  SynthesisResult res;
  out << nlohmann::json{{"kind", "commit"}, {"id", "c0"}, {"revision", 0}, {"timestamp", cfg.start - 86'400},
                        {"message", "Initial import"}}
             .dump()
      << '\n';
  for (std::size_t f = 0; f < cfg.files; ++f) emit_file(f, 0);

  std::vector<int> fix_count(cfg.methods, 0);
  std::vector<std::vector<std::size_t>> recent;  // faulty methods of earlier reports
  static constexpr double kBase[] = {0.6, 0.25, 0.15};
  for (std::size_t i = 0; i < cfg.reports; ++i) {
    const std::string rid = std::to_string(1000 + i);
    const Timestamp created = cfg.start + static_cast<Timestamp>(i) * cfg.report_spacing;
    std::vector<std::size_t> faulty;
    std::ostringstream text;
    const bool regression = !recent.empty() && unit(rng) < cfg.regression_rate;
    if (regression) {
      const std::size_t window = std::min<std::size_t>(3, recent.size());
      faulty.push_back(pick(recent[recent.size() - 1 - rng() % window]));
      for (std::size_t k = 0; k < cfg.topic_words_per_report + cfg.noise_words_per_report; ++k)
        text << (k ? " " : "") << pick(generic);
    } else {
      const std::size_t t = rng() % cfg.topics;
      std::vector<double> w;
      for (std::size_t h = 0; h < cfg.hot_per_topic; ++h) {
        const double base = h < 3 ? kBase[h] : 0.1;
        w.push_back(base + 0.1 * fix_count[t * cfg.hot_per_topic + h]);
      }
      std::discrete_distribution<std::size_t> choose(w.begin(), w.end());
      const std::size_t h = choose(rng);
      faulty.push_back(t * cfg.hot_per_topic + h);
      if (cfg.hot_per_topic > 1 && unit(rng) < cfg.second_fix_rate)
        faulty.push_back(t * cfg.hot_per_topic + (h + 1 + rng() % (cfg.hot_per_topic - 1)) % cfg.hot_per_topic);
      for (std::size_t k = 0; k < cfg.topic_words_per_report; ++k) text << (k ? " " : "") << pick(topic_words[t]);
      for (std::size_t k = 0; k < cfg.noise_words_per_report; ++k) text << ' ' << pick(generic);
    }
    if (unit(rng) < cfg.mention_rate) text << ' ' << methods[faulty.front()].name;
    nlohmann::json rep{{"kind", "report"}, {"id", rid}, {"created_at", created}, {"text", text.str()}};
    if (cfg.projects > 1) rep["project"] = "p" + std::to_string(i % cfg.projects);
    out << rep.dump() << '\n';

    const Revision r = static_cast<Revision>(i) + 1;
    out << nlohmann::json{{"kind", "commit"}, {"id", "c" + std::to_string(r)}, {"revision", r},
                          {"timestamp", created + 2 * 86'400}, {"message", "Fixed bug " + rid}}
               .dump()
        << '\n';
    std::set<std::size_t> touched;
    for (std::size_t m : faulty) {
      auto& st = methods[m].statements;
      const auto* topic = methods[m].topic >= 0 ? &topic_words[static_cast<std::size_t>(methods[m].topic)] : nullptr;
      st[rng() % st.size()] = statement(topic);
      ++fix_count[m];
      touched.insert(methods[m].file);
      res.planted[rid].insert(id_of(m));
    }
    for (std::size_t f : touched) emit_file(f, r);
    recent.push_back(faulty);
  }
  res.revisions = cfg.reports + 1;
  return res;
}

inline Corpus synthetic_corpus(const SynthConfig& cfg, SynthesisResult* result = nullptr) {
  std::stringstream s;
  auto r = write_synthetic_jsonl(s, cfg);
  if (result) *result = std::move(r);
  return read_corpus_jsonl(s);
}

}  // namespace revloc

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

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <string>

#include "revloc/error.hpp"
#include "revloc/folds.hpp"
#include "revloc/model.hpp"
#include "revloc/simrank.hpp"

namespace revloc {

/// Settings shared by every subcommand. The text form is one `key = value`
/// per line; `#` starts a comment. Model keys carry a `model.` prefix and
/// SimRank keys a `simrank.` prefix.
///
///   corpus = data/corpus.jsonl      raw input read by `ingest`
///   output = out                    every artifact goes here
///   store = out/graph.txt           defaults to <output>/graph.txt
///   seed = 1                        copied into model.seed
///   fold_mode = within | cross
///   simrank.decay / simrank.iterations / simrank.threshold
///   model.d, model.epochs, model.use_menn, ...
struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path output = "out";
  std::filesystem::path store;
  std::uint64_t seed = 1;
  FoldMode fold_mode = FoldMode::kWithinProject;
  SimRankConfig simrank;
  ModelConfig model;

  std::filesystem::path store_path() const { return store.empty() ? output / "graph.txt" : store; }
  std::filesystem::path normalized_corpus() const { return output / "corpus.jsonl"; }
  std::filesystem::path model_path() const { return output / "model.txt"; }

  void set(const std::string& key, const std::string& value) {
    try {
      if (key == "corpus") corpus = value;
      else if (key == "output") output = value;
      else if (key == "store") store = value;
      else if (key == "seed") model.seed = seed = std::stoull(value);
      else if (key == "fold_mode") {
        if (value == "within") fold_mode = FoldMode::kWithinProject;
        else if (value == "cross") fold_mode = FoldMode::kCrossProject;
        else throw ArgumentError("fold_mode must be 'within' or 'cross', got '" + value + "'");
      } else if (key == "simrank.decay") simrank.decay = std::stod(value);
      else if (key == "simrank.iterations") simrank.iterations = std::stoi(value);
      else if (key == "simrank.threshold") simrank.emit_threshold = std::stod(value);
      else if (key.rfind("model.", 0) == 0) {
        if (key == "model.seed") throw ArgumentError("set the seed with 'seed', not 'model.seed'");
        if (!model.set(key.substr(6), value)) throw ArgumentError("unknown config key '" + key + "'");
      } else {
        throw ArgumentError("unknown config key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ArgumentError("bad value '" + value + "' for " + key);
    }
  }

  /// Applies a `key=value` override.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ArgumentError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void validate() const {
    simrank.validate();
    model.validate();
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }
};

inline PipelineConfig parse_pipeline_config(std::istream& in, const std::filesystem::path& base = {}) {
  PipelineConfig cfg;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (PipelineConfig::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(n) + ": expected key = value");
    try {
      cfg.set(PipelineConfig::trim(line.substr(0, eq)), PipelineConfig::trim(line.substr(eq + 1)));
    } catch (const ArgumentError& e) {
      throw FormatError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
  // Relative paths are relative to the config file.
  for (auto* p : {&cfg.corpus, &cfg.output, &cfg.store})
    if (!p->empty() && p->is_relative() && !base.empty()) *p = (base / *p).lexically_normal();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  return parse_pipeline_config(in, path.parent_path());
}

}  // namespace revloc

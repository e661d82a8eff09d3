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

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "revloc/corpus.hpp"
#include "revloc/error.hpp"
#include "revloc/features.hpp"
#include "revloc/kernels.hpp"
#include "revloc/tape.hpp"
#include "revloc/tensor.hpp"

namespace revloc {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t cap_tokens = 200;   // N_M
  std::size_t cap_api = 50;       // N_A
  std::size_t cap_comment = 50;   // N_C
  std::size_t cap_report = 300;   // N_R
  int short_threshold = 5;        // statements
  std::size_t max_similar = 8;
  std::size_t max_callees = 8;
  std::size_t negatives = 300;
  std::size_t match_hidden = 0;   // 0 means d
  std::size_t flnn_hidden = 16;
  double learning_rate = 0.05;
  double clip_norm = 5.0;
  int epochs = 1;
  std::size_t batch_size = 1;     // instances per SGD step
  std::uint64_t seed = 1;
  bool use_rcfs = true;
  bool use_bffs = true;
  bool use_bfrs = true;
  bool use_menn = true;

  std::size_t hidden() const { return match_hidden == 0 ? d : match_hidden; }

  void validate() const {
    if (d < 1) throw ArgumentError("d must be >= 1");
    if (cap_tokens < 1 || cap_api < 1 || cap_comment < 1 || cap_report < 1) throw ArgumentError("caps must be >= 1");
    if (negatives < 1) throw ArgumentError("negatives must be >= 1");
    if (flnn_hidden < 1) throw ArgumentError("flnn_hidden must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
    if (epochs < 0) throw ArgumentError("epochs must be >= 0");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  }

  std::map<std::string, std::string> to_map() const {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    char lr[32], clip[32];
    std::snprintf(lr, sizeof lr, "%.17g", learning_rate);
    std::snprintf(clip, sizeof clip, "%.17g", clip_norm);
    return {{"d", std::to_string(d)},
            {"cap_tokens", std::to_string(cap_tokens)},
            {"cap_api", std::to_string(cap_api)},
            {"cap_comment", std::to_string(cap_comment)},
            {"cap_report", std::to_string(cap_report)},
            {"short_threshold", std::to_string(short_threshold)},
            {"max_similar", std::to_string(max_similar)},
            {"max_callees", std::to_string(max_callees)},
            {"negatives", std::to_string(negatives)},
            {"match_hidden", std::to_string(match_hidden)},
            {"flnn_hidden", std::to_string(flnn_hidden)},
            {"learning_rate", lr},
            {"clip_norm", clip},
            {"epochs", std::to_string(epochs)},
            {"batch_size", std::to_string(batch_size)},
            {"seed", std::to_string(seed)},
            {"use_rcfs", b(use_rcfs)},
            {"use_bffs", b(use_bffs)},
            {"use_bfrs", b(use_bfrs)},
            {"use_menn", b(use_menn)}};
  }

  /// Applies recognised keys; returns false for an unknown key.
  bool set(const std::string& key, const std::string& value) {
    auto to_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
    auto to_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw ArgumentError("expected true/false for " + key + ", got '" + value + "'");
    };
    try {
      if (key == "d") d = to_size();
      else if (key == "cap_tokens") cap_tokens = to_size();
      else if (key == "cap_api") cap_api = to_size();
      else if (key == "cap_comment") cap_comment = to_size();
      else if (key == "cap_report") cap_report = to_size();
      else if (key == "short_threshold") short_threshold = std::stoi(value);
      else if (key == "max_similar") max_similar = to_size();
      else if (key == "max_callees") max_callees = to_size();
      else if (key == "negatives") negatives = to_size();
      else if (key == "match_hidden") match_hidden = to_size();
      else if (key == "flnn_hidden") flnn_hidden = to_size();
      else if (key == "learning_rate") learning_rate = std::stod(value);
      else if (key == "clip_norm") clip_norm = std::stod(value);
      else if (key == "epochs") epochs = std::stoi(value);
      else if (key == "batch_size") batch_size = to_size();
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "use_rcfs") use_rcfs = to_bool();
      else if (key == "use_bffs") use_bffs = to_bool();
      else if (key == "use_bfrs") use_bfrs = to_bool();
      else if (key == "use_menn") use_menn = to_bool();
      else return false;
    } catch (const std::logic_error&) {
      throw ArgumentError("bad value '" + value + "' for " + key);
    }
    return true;
  }
};

/// Shared vocabulary for reports and all code views. Id 0 is the unknown token.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;

  Vocabulary() : words_{"<unk>"} {}

  template <class Range>
  static Vocabulary from_words(const Range& words) {
    std::set<std::string> sorted(words.begin(), words.end());
    sorted.erase("<unk>");
    Vocabulary v;
    for (const auto& w : sorted) v.add(w);
    return v;
  }

  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }

  int id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? kUnknown : it->second;
  }

  std::vector<int> encode(const std::vector<std::string>& tokens, std::size_t cap) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < tokens.size() && i < cap; ++i) out.push_back(id(tokens[i]));
    return out;
  }

  /// FNV-1a over the words and their separators.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& w : words_) {
      for (unsigned char c : w) h = (h ^ c) * 1099511628211ULL;
      h = (h ^ 0xffu) * 1099511628211ULL;
    }
    return h;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  void add(const std::string& w) {
    index_.emplace(w, static_cast<int>(words_.size()));
    words_.push_back(w);
  }
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct EncodedMethod {
  std::vector<int> tokens, api, comment;
  bool is_short = false;
};

using EncodedReport = std::vector<int>;

enum View : int { kViewTokens = 0, kViewApi = 1, kViewComment = 2, kViewReport = 3 };
inline constexpr std::array<const char*, 4> kViewNames = {"M", "A", "C", "R"};

/// Creates every parameter with its shape; values are zero.
inline nn::ParameterSet make_parameters(const ModelConfig& cfg, std::size_t vocab_size) {
  const std::size_t d = cfg.d, h = cfg.hidden(), h2 = cfg.flnn_hidden;
  nn::ParameterSet ps;
  ps.add("E", {vocab_size, d}).row_sparse = true;
  for (const char* v : kViewNames) {
    const std::string p = v;
    ps.add(p + ".Wf", {d, 2 * d});
    ps.add(p + ".Wb", {d, 2 * d});
    ps.add(p + ".Wo", {d, 2 * d});
    ps.add(p + ".bo", {d}, true);
  }
  ps.add("smnn.Wv", {d, d});
  ps.add("smnn.Wr", {d, d});
  ps.add("match.W1", {h, 2 * d});
  ps.add("match.b1", {h}, true);
  ps.add("match.W2", {1, h});
  ps.add("match.b2", {1}, true);
  ps.add("menn.Wn", {d, d});
  ps.add("menn.Ws", {d, d});
  for (const char* g : {"gru.Wq", "gru.Uq", "gru.Wr", "gru.Ur", "gru.Wu", "gru.Uu"}) ps.add(g, {d, d});
  ps.add("flnn.W1", {h2, 4});
  ps.add("flnn.b1", {h2}, true);
  ps.add("flnn.W2", {2, h2});
  ps.add("flnn.b2", {2}, true);
  return ps;
}

/// Direct pointers into a ParameterSet, resolved once per use site.
struct Weights {
  nn::Parameter* E;
  std::array<nn::BrnnParams, 4> view;
  nn::Parameter *Wv, *Wr_att;
  nn::Parameter *W1, *b1, *W2, *b2;
  nn::Parameter *Wn, *Ws;
  nn::Parameter *Wq, *Uq, *Wr, *Ur, *Wu, *Uu;
  nn::Parameter *F1, *fb1, *F2, *fb2;

  static Weights of(nn::ParameterSet& ps) {
    Weights w{};
    w.E = &ps.get("E");
    for (int v = 0; v < 4; ++v) {
      const std::string p = kViewNames[static_cast<std::size_t>(v)];
      w.view[static_cast<std::size_t>(v)] = {&ps.get(p + ".Wf"), &ps.get(p + ".Wb"), &ps.get(p + ".Wo"), &ps.get(p + ".bo")};
    }
    w.Wv = &ps.get("smnn.Wv");
    w.Wr_att = &ps.get("smnn.Wr");
    w.W1 = &ps.get("match.W1");
    w.b1 = &ps.get("match.b1");
    w.W2 = &ps.get("match.W2");
    w.b2 = &ps.get("match.b2");
    w.Wn = &ps.get("menn.Wn");
    w.Ws = &ps.get("menn.Ws");
    w.Wq = &ps.get("gru.Wq");
    w.Uq = &ps.get("gru.Uq");
    w.Wr = &ps.get("gru.Wr");
    w.Ur = &ps.get("gru.Ur");
    w.Wu = &ps.get("gru.Wu");
    w.Uu = &ps.get("gru.Uu");
    w.F1 = &ps.get("flnn.W1");
    w.fb1 = &ps.get("flnn.b1");
    w.F2 = &ps.get("flnn.W2");
    w.fb2 = &ps.get("flnn.b2");
    return w;
  }
  std::size_t d() const { return E->value.cols(); }
};

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  nn::ParameterSet params;

  /// Fresh model with weights uniform in [-1/sqrt(d), 1/sqrt(d)] and zero biases.
  static Model create(const ModelConfig& cfg, Vocabulary vocab) {
    cfg.validate();
    Model m{cfg, std::move(vocab), {}};
    m.params = make_parameters(cfg, m.vocab.size());
    nn::init_uniform(m.params, 1.0 / std::sqrt(static_cast<double>(cfg.d)), cfg.seed);
    return m;
  }

  EncodedMethod encode(const MethodRecord& m) const {
    return {vocab.encode(m.tokens, config.cap_tokens), vocab.encode(m.api_calls, config.cap_api),
            vocab.encode(m.comment, config.cap_comment), m.statement_count < config.short_threshold};
  }
  EncodedReport encode(const BugReportRecord& r) const { return vocab.encode(r.tokens, config.cap_report); }
};

// ---------------------------------------------------------------------------
// Network pieces, recorded on a tape.

using nn::Tape;
using nn::Var;

/// BRNN + maxpool over one token sequence; an empty sequence is the zero vector.
inline Var embed_sequence(Tape& t, const Weights& w, View view, std::span<const int> ids) {
  if (ids.empty()) return t.zeros(w.d());
  const auto xs = nn::embed(t, *w.E, ids);
  const auto states = nn::brnn(t, w.view[static_cast<std::size_t>(view)], xs);
  return nn::maxpool(t, states);
}

struct ViewVars {
  Var m, a, c;
};

inline ViewVars embed_method(Tape& t, const Weights& w, const EncodedMethod& em) {
  if (em.tokens.empty() && em.api.empty() && em.comment.empty())
    throw DegenerateInputError("method has no tokens in any view");
  return {embed_sequence(t, w, kViewTokens, em.tokens), embed_sequence(t, w, kViewApi, em.api),
          embed_sequence(t, w, kViewComment, em.comment)};
}

inline Var embed_report(Tape& t, const Weights& w, const EncodedReport& r) {
  return embed_sequence(t, w, kViewReport, r);
}

/// Report-guided attention over the three method views.
inline Var smnn_fuse(Tape& t, const Weights& w, const ViewVars& v, Var r) {
  const Var wr = t.affine(*w.Wr_att, r);
  const std::array<Var, 3> views = {v.m, v.a, v.c};
  std::array<Var, 3> scores{};
  for (std::size_t i = 0; i < 3; ++i) scores[i] = t.sum(t.tanh(t.add(t.affine(*w.Wv, views[i]), wr)));
  const Var alpha = t.softmax(t.concat(scores));
  return t.weighted_sum(alpha, views);
}

/// Attention over relevant methods, then the GRU-style gate. No neighbors
/// means no expansion.
inline Var menn_expand(Tape& t, const Weights& w, Var s, std::span<const Var> neighbors) {
  if (neighbors.empty()) return s;
  const Var ws = t.affine(*w.Ws, s);
  std::vector<Var> scores;
  scores.reserve(neighbors.size());
  for (Var n : neighbors) scores.push_back(t.sum(t.tanh(t.add(t.affine(*w.Wn, n), ws))));
  const Var alpha = t.softmax(t.concat(scores));
  const Var u = t.weighted_sum(alpha, neighbors);
  const Var q = t.sigmoid(t.add(t.affine(*w.Wq, s), t.affine(*w.Uq, u)));
  const Var r = t.sigmoid(t.add(t.affine(*w.Wr, s), t.affine(*w.Ur, u)));
  const Var u_hat = t.tanh(t.add(t.affine(*w.Wu, s), t.mul(r, t.affine(*w.Uu, u))));
  return t.add(t.mul(t.one_minus(q), s), t.mul(q, u_hat));
}

/// Scalar relevance e of method vector s to report vector r.
inline Var match(Tape& t, const Weights& w, Var s, Var r) {
  const Var h = t.sigmoid(t.affine(*w.W1, s, r, w.b1));
  return t.affine(*w.W2, h, std::nullopt, w.b2);
}

/// z = [e; rcfs; log(1 + bffs); bfrs] with disabled features zeroed.
inline std::array<double, 3> feature_inputs(const FixingFeatures& f, const ModelConfig& cfg) {
  for (double v : {f.rcfs, f.bffs, f.bfrs})
    if (!std::isfinite(v)) throw NumericError("non-finite bug-fixing feature");
  return {cfg.use_rcfs ? f.rcfs : 0.0, cfg.use_bffs ? std::log1p(f.bffs) : 0.0, cfg.use_bfrs ? f.bfrs : 0.0};
}

/// Two logits (positive, negative) of the fault-localization MLP.
inline Var flnn_logits(Tape& t, const Weights& w, Var e, const std::array<double, 3>& features) {
  const Var z = t.concat(std::array<Var, 2>{e, t.input(features)});
  const Var h = t.sigmoid(t.affine(*w.F1, z, std::nullopt, w.fb1));
  return t.affine(*w.F2, h, std::nullopt, w.fb2);
}

/// Full forward pass for one (method, report) pair given the report vector.
/// Neighbors are embedded and fused with the same report, without their own
/// expansion.
inline Var instance_logits(Tape& t, const Weights& w, const ModelConfig& cfg, const EncodedMethod& method,
                           std::span<const EncodedMethod* const> neighbors, Var r, const FixingFeatures& f) {
  Var s = smnn_fuse(t, w, embed_method(t, w, method), r);
  if (cfg.use_menn && method.is_short && !neighbors.empty()) {
    std::vector<Var> ns;
    ns.reserve(neighbors.size());
    for (const EncodedMethod* n : neighbors) ns.push_back(smnn_fuse(t, w, embed_method(t, w, *n), r));
    s = menn_expand(t, w, s, ns);
  }
  return flnn_logits(t, w, match(t, w, s, r), feature_inputs(f, cfg));
}

/// Class index of a label in the logit vector.
inline std::size_t logit_index(int label) { return label == 1 ? 0 : 1; }

/// Positive-class probability of a 2-logit node.
inline double positive_probability(const Tape& t, Var logits) {
  const auto l = t.value(logits);
  return Tape::logistic(l[0] - l[1]);
}

// ---------------------------------------------------------------------------
// Plain-value entry points.

/// yhat of the fault-localization network for a given match score.
inline double flnn_predict(double e, const FixingFeatures& f, Model& model) {
  if (!std::isfinite(e)) throw NumericError("non-finite match score");
  Tape t;
  const Weights w = Weights::of(model.params);
  const double ev[1] = {e};
  return positive_probability(t, flnn_logits(t, w, t.input(ev), feature_inputs(f, model.config)));
}

/// Binary cross-entropy of one prediction.
inline double bce(double yhat, int y) {
  const double p = y == 1 ? yhat : 1.0 - yhat;
  if (p >= 1.0) return 0.0;
  return -std::log(p);
}

struct Prediction {
  std::string method_id;
  double score = 0.0;  // yhat
  double e = 0.0;
  FixingFeatures features;
};

// ---------------------------------------------------------------------------
// Persistence:
//
//   # revloc model seed=<seed>
//   vocab <n>
//   <one token per line, ids 1..n-1>
//   <checkpoint with the config in its header>

inline void save_model(std::ostream& out, const Model& m) {
  out << "# revloc model seed=" << m.config.seed << '\n';
  out << "vocab " << m.vocab.size() << '\n';
  for (std::size_t i = 1; i < m.vocab.size(); ++i) out << m.vocab.word(i) << '\n';
  auto header = m.config.to_map();
  header["vocab_hash"] = std::to_string(m.vocab.hash());
  nn::save_checkpoint(out, m.params, header);
}

inline Model load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# revloc model", 0) != 0) throw FormatError("model: missing header line");
  std::size_t n = 0;
  std::string word;
  if (!(in >> word >> n) || word != "vocab" || n < 1) throw FormatError("model: missing vocabulary");
  std::getline(in, line);
  std::vector<std::string> words;
  for (std::size_t i = 1; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("model: truncated vocabulary");
    words.push_back(line);
  }
  std::map<std::string, std::string> header;
  Model m;
  m.params = nn::load_checkpoint(in, &header);
  m.vocab = Vocabulary::from_words(words);
  if (m.vocab.size() != n) throw FormatError("model: vocabulary has duplicate entries");
  for (const auto& [k, v] : header) {
    if (k == "vocab_hash") {
      if (v != std::to_string(m.vocab.hash())) throw FormatError("model: vocabulary hash mismatch");
    } else {
      m.config.set(k, v);
    }
  }
  const auto expected = make_parameters(m.config, m.vocab.size());
  for (const auto& p : expected.all()) {
    if (!m.params.contains(p.name) || m.params.get(p.name).value.shape != p.value.shape)
      throw FormatError("model: parameter " + p.name + " missing or misshapen");
    m.params.get(p.name).row_sparse = p.row_sparse;
  }
  return m;
}

}  // namespace revloc

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

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "revloc/error.hpp"
#include "revloc/tape.hpp"
#include "revloc/tensor.hpp"

namespace revloc::nn {

using Var = Tape::Var;

/// Rows of `table` for each id, in order.
inline std::vector<Var> embed(Tape& t, Parameter& table, std::span<const int> ids) {
  std::vector<Var> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0) throw VocabularyError("negative token id");
    out.push_back(t.embed(table, static_cast<std::size_t>(id)));
  }
  return out;
}

/// Weights of one bidirectional tanh RNN with a linear output layer.
struct BrnnParams {
  Parameter* forward = nullptr;   // d x 2d, columns [h; x]
  Parameter* backward = nullptr;  // d x 2d
  Parameter* out = nullptr;       // d x 2d, columns [h_fwd; h_bwd]
  Parameter* bias = nullptr;      // d
};

/// Output O_t for every position; zero boundary states.
inline std::vector<Var> brnn(Tape& t, const BrnnParams& p, std::span<const Var> seq) {
  if (seq.empty()) throw EmptySequenceError("brnn over an empty sequence");
  const std::size_t d = p.forward->value.rows();
  for (const Parameter* w : {p.forward, p.backward, p.out}) {
    if (w->value.shape.size() != 2 || w->value.rows() != d || w->value.cols() != 2 * d)
      throw ShapeError(w->name + ": expected " + std::to_string(d) + "x" + std::to_string(2 * d));
  }
  for (Var x : seq)
    if (t.dim(x) != d) throw ShapeError("brnn input width " + std::to_string(t.dim(x)) + ", expected " + std::to_string(d));
  const std::size_t n = seq.size();
  std::vector<Var> fwd(n), bwd(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // h_0 = 0 contributes nothing, so the first step only sees the input.
    fwd[i] = i == 0 ? t.tanh(t.affine(*p.forward, seq[i], std::nullopt, nullptr, d))
                    : t.tanh(t.affine(*p.forward, fwd[i - 1], seq[i]));
  }
  for (std::size_t i = n; i-- > 0;) {
    bwd[i] = i == n - 1 ? t.tanh(t.affine(*p.backward, seq[i], std::nullopt, nullptr, d))
                        : t.tanh(t.affine(*p.backward, bwd[i + 1], seq[i]));
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = t.affine(*p.out, fwd[i], bwd[i], p.bias);
  return out;
}

inline Var maxpool(Tape& t, std::span<const Var> states) { return t.maxpool(states); }

/// Softmax of plain scores.
inline std::vector<double> attention_weights(std::span<const double> scores) {
  if (scores.empty()) throw EmptySequenceError("attention over no scores");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite attention score");
  std::vector<double> out(scores.size());
  Tape::softmax_into(scores.data(), scores.size(), out.data());
  return out;
}

struct GradCheckResult {
  bool passed = true;
  double worst = 0.0;  // worst relative error
  std::string where;   // parameter[index] of the worst coordinate
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences for every
/// coordinate of `params`. `f` records a scalar loss on the tape it is given.
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params, double eps,
                                  double tol) {
  if (!(eps > 0.0)) throw ArgumentError("grad_check needs eps > 0");
  Tape t;
  for (Parameter* p : params) std::fill(p->grad.values.begin(), p->grad.values.end(), 0.0);
  const Var root = f(t);
  if (!std::isfinite(t.scalar(root))) throw NumericError("loss is not finite");
  t.backward(root);
  auto eval = [&]() {
    Tape probe;
    const double v = probe.scalar(f(probe));
    if (!std::isfinite(v)) throw NumericError("loss is not finite under perturbation");
    return v;
  };
  GradCheckResult r;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& x = p->value.values[i];
      const double saved = x;
      x = saved + eps;
      const double up = eval();
      x = saved - eps;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.values[i];
      const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++r.checked;
      if (rel > r.worst) {
        r.worst = rel;
        r.where = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  r.passed = r.worst <= tol;
  return r;
}

}  // namespace revloc::nn

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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revloc/error.hpp"
#include "revloc/tensor.hpp"

namespace revloc::nn {

/// Reverse-mode tape over vector-valued nodes. Values and gradients live in
/// two flat arenas; clear() keeps their capacity for the next step.
///
/// Ops that read a Parameter read its current value in both passes and
/// accumulate straight into its gradient, so parameters must not change
/// between forward() and backward().
class Tape {
 public:
  using Var = std::uint32_t;

  std::size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    args_.clear();
    ints_.clear();
    min_margin_ = std::numeric_limits<double>::infinity();
  }

  std::span<const double> value(Var v) const { return {values_.data() + nodes_[v].off, nodes_[v].n}; }
  double scalar(Var v) const { return values_[nodes_[v].off]; }
  std::size_t dim(Var v) const { return nodes_[v].n; }
  std::span<const double> grad(Var v) const { return {grads_.data() + nodes_[v].off, nodes_[v].n}; }

  /// Smallest gap between the winner and runner-up of any maxpool
  /// coordinate; small values mean the function is near a kink.
  double min_maxpool_margin() const { return min_margin_; }

  Var input(std::span<const double> x) {
    const Var v = push(Op::kInput, x.size());
    std::copy(x.begin(), x.end(), values_.begin() + static_cast<std::ptrdiff_t>(nodes_[v].off));
    return v;
  }
  Var zeros(std::size_t n) { return push(Op::kInput, n); }

  /// Row `row` of a 2-D parameter.
  Var embed(Parameter& table, std::size_t row) {
    if (row >= table.value.rows()) {
      throw VocabularyError("token id " + std::to_string(row) + " outside vocabulary of " +
                            std::to_string(table.value.rows()));
    }
    const std::size_t d = table.value.cols();
    const Var v = push(Op::kEmbed, d);
    nodes_[v].p = &table;
    nodes_[v].aux = static_cast<std::uint32_t>(row);
    std::copy_n(table.value.values.begin() + static_cast<std::ptrdiff_t>(row * d), d, vals(v));
    return v;
  }

  /// W[:, c0 : c0+n1] x1 (+ W[:, c0+n1 : c0+n1+n2] x2) (+ b).
  Var affine(Parameter& w, Var x1, std::optional<Var> x2 = std::nullopt, Parameter* bias = nullptr,
             std::size_t col_offset = 0) {
    const std::size_t rows = w.value.rows(), cols = w.value.cols();
    const std::size_t n1 = dim(x1), n2 = x2 ? dim(*x2) : 0;
    if (w.value.shape.size() != 2 || col_offset + n1 + n2 > cols) {
      throw ShapeError(w.name + ": cannot multiply " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " by input of width " + std::to_string(n1 + n2) + " at column " + std::to_string(col_offset));
    }
    if (bias && bias->value.size() != rows) throw ShapeError(bias->name + ": bias does not match " + w.name);
    const Var v = push(Op::kAffine, rows);
    Node& nd = nodes_[v];
    nd.a = x1;
    nd.b = x2 ? *x2 : kNone;
    nd.p = &w;
    nd.p2 = bias;
    nd.aux = static_cast<std::uint32_t>(col_offset);
    double* y = vals(v);
    const double* a = vals(x1);
    const double* b = x2 ? vals(*x2) : nullptr;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* wr = w.value.values.data() + i * cols + col_offset;
      double s = bias ? bias->value.values[i] : 0.0;
      s += dot(wr, a, n1);
      if (b) s += dot(wr + n1, b, n2);
      y[i] = s;
    }
    return v;
  }

  Var add(Var a, Var b) {
    same_dim(a, b, "add");
    const Var v = push(Op::kAdd, dim(a));
    link(v, a, b);
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = vals(a)[i] + vals(b)[i];
    return v;
  }

  Var mul(Var a, Var b) {
    same_dim(a, b, "mul");
    const Var v = push(Op::kMul, dim(a));
    link(v, a, b);
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = vals(a)[i] * vals(b)[i];
    return v;
  }

  Var scale(Var a, double s) {
    const Var v = push(Op::kScale, dim(a));
    link(v, a);
    nodes_[v].s = s;
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = s * vals(a)[i];
    return v;
  }

  Var tanh(Var a) {
    const Var v = push(Op::kTanh, dim(a));
    link(v, a);
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = std::tanh(vals(a)[i]);
    return v;
  }

  Var sigmoid(Var a) {
    const Var v = push(Op::kSigmoid, dim(a));
    link(v, a);
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = logistic(vals(a)[i]);
    return v;
  }

  Var one_minus(Var a) {
    const Var v = push(Op::kOneMinus, dim(a));
    link(v, a);
    for (std::size_t i = 0; i < dim(v); ++i) vals(v)[i] = 1.0 - vals(a)[i];
    return v;
  }

  /// Sum of coordinates, a 1-vector.
  Var sum(Var a) {
    const Var v = push(Op::kSum, 1);
    link(v, a);
    double s = 0.0;
    for (std::size_t i = 0; i < dim(a); ++i) s += vals(a)[i];
    vals(v)[0] = s;
    return v;
  }

  Var concat(std::span<const Var> xs) {
    std::size_t n = 0;
    for (Var x : xs) n += dim(x);
    const Var v = push(Op::kConcat, n);
    set_args(v, xs);
    std::size_t o = 0;
    for (Var x : xs) {
      std::copy_n(vals(x), dim(x), vals(v) + o);
      o += dim(x);
    }
    return v;
  }

  Var slice(Var a, std::size_t offset, std::size_t n) {
    if (offset + n > dim(a)) throw ShapeError("slice out of range");
    const Var v = push(Op::kSlice, n);
    link(v, a);
    nodes_[v].aux = static_cast<std::uint32_t>(offset);
    std::copy_n(vals(a) + offset, n, vals(v));
    return v;
  }

  /// Softmax with max subtraction.
  Var softmax(Var a) {
    if (dim(a) == 0) throw EmptySequenceError("softmax of an empty vector");
    const Var v = push(Op::kSoftmax, dim(a));
    link(v, a);
    softmax_into(vals(a), dim(a), vals(v));
    return v;
  }

  /// sum_k w[k] * xs[k].
  Var weighted_sum(Var w, std::span<const Var> xs) {
    if (xs.empty() || dim(w) != xs.size()) throw ShapeError("weighted_sum: weight count does not match inputs");
    const std::size_t n = dim(xs[0]);
    for (Var x : xs) same_dim(x, xs[0], "weighted_sum");
    const Var v = push(Op::kWeightedSum, n);
    link(v, w);
    set_args(v, xs);
    double* y = vals(v);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double wk = vals(w)[k];
      const double* x = vals(xs[k]);
      for (std::size_t i = 0; i < n; ++i) y[i] += wk * x[i];
    }
    return v;
  }

  /// Coordinatewise maximum over a nonempty list of equal-width vectors.
  Var maxpool(std::span<const Var> xs) {
    if (xs.empty()) throw EmptySequenceError("maxpool over an empty sequence");
    const std::size_t n = dim(xs[0]);
    for (Var x : xs) same_dim(x, xs[0], "maxpool");
    const Var v = push(Op::kMaxPool, n);
    set_args(v, xs);
    nodes_[v].aux = static_cast<std::uint32_t>(ints_.size());
    double* y = vals(v);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double top = vals(xs[0])[i], second = -std::numeric_limits<double>::infinity();
      for (std::uint32_t k = 1; k < xs.size(); ++k) {
        const double x = vals(xs[k])[i];
        if (x > top) {
          second = top;
          top = x;
          best = k;
        } else if (x > second) {
          second = x;
        }
      }
      y[i] = top;
      ints_.push_back(best);
      if (xs.size() > 1) min_margin_ = std::min(min_margin_, top - second);
    }
    return v;
  }

  /// -log softmax(logits)[target], computed stably.
  Var nll_softmax(Var logits, std::size_t target) {
    if (target >= dim(logits)) throw ShapeError("nll target out of range");
    const Var v = push(Op::kNllSoftmax, 1);
    link(v, logits);
    nodes_[v].aux = static_cast<std::uint32_t>(target);
    const double* l = vals(logits);
    const double m = *std::max_element(l, l + dim(logits));
    double z = 0.0;
    for (std::size_t i = 0; i < dim(logits); ++i) z += std::exp(l[i] - m);
    vals(v)[0] = m + std::log(z) - l[target];
    return v;
  }

  /// Mean of scalar nodes.
  Var mean(std::span<const Var> xs) {
    if (xs.empty()) throw EmptySequenceError("mean of no terms");
    const Var v = push(Op::kMean, 1);
    set_args(v, xs);
    double s = 0.0;
    for (Var x : xs) s += vals(x)[0];
    vals(v)[0] = s / static_cast<double>(xs.size());
    return v;
  }

  /// Accumulates d(root)/d(parameter) into every parameter the tape touched.
  void backward(Var root) {
    if (dim(root) != 1) throw ShapeError("backward needs a scalar root");
    grads_.assign(values_.size(), 0.0);
    grads_[nodes_[root].off] = 1.0;
    for (std::size_t idx = root + 1; idx-- > 0;) backprop(static_cast<Var>(idx));
  }

  static double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

  static void softmax_into(const double* x, std::size_t n, double* y) {
    const double m = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += (y[i] = std::exp(x[i] - m));
    for (std::size_t i = 0; i < n; ++i) y[i] /= z;
  }

 private:
  enum class Op : std::uint8_t {
    kInput, kEmbed, kAffine, kAdd, kMul, kScale, kTanh, kSigmoid, kOneMinus,
    kSum, kConcat, kSlice, kSoftmax, kWeightedSum, kMaxPool, kNllSoftmax, kMean,
  };
  static constexpr Var kNone = std::numeric_limits<Var>::max();

  struct Node {
    Op op;
    Var a = kNone, b = kNone;
    std::uint32_t args_off = 0, args_n = 0;
    std::size_t off = 0;
    std::size_t n = 0;
    Parameter* p = nullptr;
    Parameter* p2 = nullptr;
    double s = 0.0;
    std::uint32_t aux = 0;
  };

  Var push(Op op, std::size_t n) {
    Node nd;
    nd.op = op;
    nd.off = values_.size();
    nd.n = n;
    values_.resize(values_.size() + n, 0.0);
    nodes_.push_back(nd);
    return static_cast<Var>(nodes_.size() - 1);
  }
  void link(Var v, Var a, Var b = kNone) {
    nodes_[v].a = a;
    nodes_[v].b = b;
  }
  void set_args(Var v, std::span<const Var> xs) {
    nodes_[v].args_off = static_cast<std::uint32_t>(args_.size());
    nodes_[v].args_n = static_cast<std::uint32_t>(xs.size());
    args_.insert(args_.end(), xs.begin(), xs.end());
  }
  void same_dim(Var a, Var b, const char* op) const {
    if (dim(a) != dim(b)) {
      throw ShapeError(std::string(op) + ": width " + std::to_string(dim(a)) + " vs " + std::to_string(dim(b)));
    }
  }
  // Four partial sums keep the FMA pipeline busy; the order is fixed, so
  // results stay deterministic.
  static double dot(const double* __restrict x, const double* __restrict y, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      s0 += x[j] * y[j];
      s1 += x[j + 1] * y[j + 1];
      s2 += x[j + 2] * y[j + 2];
      s3 += x[j + 3] * y[j + 3];
    }
    for (; j < n; ++j) s0 += x[j] * y[j];
    return (s0 + s1) + (s2 + s3);
  }
  static void axpy(double* __restrict y, double a, const double* __restrict x, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
  }

  double* vals(Var v) { return values_.data() + nodes_[v].off; }
  double* grads(Var v) { return grads_.data() + nodes_[v].off; }

  void backprop(Var v) {
    const Node nd = nodes_[v];
    const double* g = grads(v);
    const double* y = vals(v);
    const std::size_t n = nd.n;
    switch (nd.op) {
      case Op::kInput:
        break;
      case Op::kEmbed: {
        if (nd.p->row_sparse) nd.p->touched.push_back(nd.aux);
        double* tg = nd.p->grad.values.data() + static_cast<std::size_t>(nd.aux) * n;
        for (std::size_t i = 0; i < n; ++i) tg[i] += g[i];
        break;
      }
      case Op::kAffine: {
        Parameter& w = *nd.p;
        const std::size_t cols = w.value.cols();
        const std::size_t n1 = dim(nd.a), n2 = nd.b == kNone ? 0 : dim(nd.b);
        const double* xa = vals(nd.a);
        double* ga = grads(nd.a);
        const double* xb = n2 ? vals(nd.b) : nullptr;
        double* gb = n2 ? grads(nd.b) : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* wr = w.value.values.data() + i * cols + nd.aux;
          double* wg = w.grad.values.data() + i * cols + nd.aux;
          axpy(wg, gi, xa, n1);
          axpy(ga, gi, wr, n1);
          if (n2) {
            axpy(wg + n1, gi, xb, n2);
            axpy(gb, gi, wr + n1, n2);
          }
        }
        if (nd.p2)
          for (std::size_t i = 0; i < n; ++i) nd.p2->grad.values[i] += g[i];
        break;
      }
      case Op::kAdd: {
        double* ga = grads(nd.a);
        double* gb = grads(nd.b);
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kMul: {
        double* ga = grads(nd.a);
        double* gb = grads(nd.b);
        const double* xa = vals(nd.a);
        const double* xb = vals(nd.b);
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += g[i] * xb[i];
          gb[i] += g[i] * xa[i];
        }
        break;
      }
      case Op::kScale: {
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += nd.s * g[i];
        break;
      }
      case Op::kTanh: {
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::kSigmoid: {
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::kOneMinus: {
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] -= g[i];
        break;
      }
      case Op::kSum: {
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < dim(nd.a); ++i) ga[i] += g[0];
        break;
      }
      case Op::kConcat: {
        std::size_t o = 0;
        for (std::uint32_t k = 0; k < nd.args_n; ++k) {
          const Var x = args_[nd.args_off + k];
          double* gx = grads(x);
          for (std::size_t i = 0; i < dim(x); ++i) gx[i] += g[o + i];
          o += dim(x);
        }
        break;
      }
      case Op::kSlice: {
        double* ga = grads(nd.a) + nd.aux;
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        break;
      }
      case Op::kSoftmax: {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += y[i] * (g[i] - dot);
        break;
      }
      case Op::kWeightedSum: {
        const double* w = vals(nd.a);
        double* gw = grads(nd.a);
        for (std::uint32_t k = 0; k < nd.args_n; ++k) {
          const Var x = args_[nd.args_off + k];
          const double* xv = vals(x);
          double* gx = grads(x);
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            dot += g[i] * xv[i];
            gx[i] += w[k] * g[i];
          }
          gw[k] += dot;
        }
        break;
      }
      case Op::kMaxPool: {
        for (std::size_t i = 0; i < n; ++i) {
          const Var x = args_[nd.args_off + ints_[nd.aux + i]];
          grads(x)[i] += g[i];
        }
        break;
      }
      case Op::kNllSoftmax: {
        const std::size_t k = dim(nd.a);
        std::vector<double> p(k);
        softmax_into(vals(nd.a), k, p.data());
        double* ga = grads(nd.a);
        for (std::size_t i = 0; i < k; ++i) ga[i] += g[0] * (p[i] - (i == nd.aux ? 1.0 : 0.0));
        break;
      }
      case Op::kMean: {
        const double share = g[0] / static_cast<double>(nd.args_n);
        for (std::uint32_t k = 0; k < nd.args_n; ++k) grads(args_[nd.args_off + k])[0] += share;
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<Var> args_;
  std::vector<std::uint32_t> ints_;
  double min_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace revloc::nn

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
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "revloc/error.hpp"

namespace revloc::nn {

/// Dense row-major array of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
      : shape(std::move(dims)), values(product(shape), fill) {}

  static Tensor vector(std::vector<double> v) {
    Tensor t;
    t.shape = {v.size()};
    t.values = std::move(v);
    return t;
  }

  static std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool is_bias = false;
  // Lookup tables: only rows listed in `touched` may hold nonzero gradient,
  // so updates can skip the rest.
  bool row_sparse = false;
  std::vector<std::uint32_t> touched;

  /// Calls f(offset, length) for every gradient span that may be nonzero.
  template <class F>
  void for_each_live_span(F f) {
    if (!row_sparse) {
      f(std::size_t{0}, grad.size());
      return;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    const std::size_t w = value.cols();
    for (auto r : touched) f(r * w, w);
  }
};

/// Named parameters in insertion order. Addresses are stable.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, std::vector<std::size_t> shape, bool is_bias = false) {
    if (index_.contains(name)) throw ArgumentError("duplicate parameter " + name);
    index_[name] = params_.size();
    Parameter& p = params_.emplace_back();
    p.name = name;
    p.value = Tensor(shape);
    p.grad = Tensor(std::move(shape));
    p.is_bias = is_bias;
    return p;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }
  Parameter& get(const std::string& name) { return params_.at(lookup(name)); }
  const Parameter& get(const std::string& name) const { return params_.at(lookup(name)); }

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad() {
    for (auto& p : params_) {
      p.for_each_live_span([&](std::size_t o, std::size_t n) { std::fill_n(p.grad.values.begin() + static_cast<std::ptrdiff_t>(o), n, 0.0); });
      p.touched.clear();
    }
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& p : params_)
      for (double g : p.grad.values) s += g * g;
    return std::sqrt(s);
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
      if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) return false;
    }
    return true;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UnresolvedReferenceError("unknown parameter " + name);
    return it->second;
  }

  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Weights uniform in [-bound, bound]; biases zero.
inline void init_uniform(ParameterSet& ps, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& p : ps.all()) {
    for (double& v : p.value.values) v = p.is_bias ? 0.0 : u(rng);
  }
}

/// Plain SGD with global gradient-norm clipping. Consumes the gradients:
/// they are zero afterwards. Returns the norm before clipping.
inline double sgd_step(ParameterSet& ps, double learning_rate, double clip_norm) {
  double sq = 0.0;
  for (auto& p : ps.all()) {
    p.for_each_live_span([&](std::size_t o, std::size_t n) {
      for (std::size_t i = o; i < o + n; ++i) sq += p.grad.values[i] * p.grad.values[i];
    });
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  const double step = learning_rate * ((clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0);
  for (auto& p : ps.all()) {
    p.for_each_live_span([&](std::size_t o, std::size_t n) {
      for (std::size_t i = o; i < o + n; ++i) {
        p.value.values[i] -= step * p.grad.values[i];
        p.grad.values[i] = 0.0;
      }
    });
    p.touched.clear();
  }
  return norm;
}

// Checkpoint text layout:
//
//   revloc-checkpoint 1
//   header <n>            then n lines "<key> <value>"
//   params <n>
//   param <name> <bias:0|1> <rank> <dim>...
//   <values, space separated, %.17g>
//
// %.17g round-trips every double exactly.

inline void save_checkpoint(std::ostream& out, const ParameterSet& ps,
                            const std::map<std::string, std::string>& header = {}) {
  out << "revloc-checkpoint 1\nheader " << header.size() << '\n';
  for (const auto& [k, v] : header) out << k << ' ' << v << '\n';
  out << "params " << ps.all().size() << '\n';
  char buf[40];
  for (const auto& p : ps.all()) {
    out << "param " << p.name << ' ' << (p.is_bias ? 1 : 0) << ' ' << p.value.shape.size();
    for (auto d : p.value.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p.value.values[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
}

inline ParameterSet load_checkpoint(std::istream& in, std::map<std::string, std::string>* header = nullptr) {
  auto fail = [](const std::string& why) { return FormatError("checkpoint: " + why); };
  std::string magic, word;
  int version = 0;
  if (!(in >> magic >> version) || magic != "revloc-checkpoint" || version != 1) throw fail("bad magic line");
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "header") throw fail("missing header count");
  std::string line;
  std::getline(in, line);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw fail("truncated header");
    const auto sp = line.find(' ');
    if (header) (*header)[line.substr(0, sp)] = sp == std::string::npos ? "" : line.substr(sp + 1);
  }
  if (!(in >> word >> n) || word != "params") throw fail("missing parameter count");
  ParameterSet ps;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name;
    int bias = 0;
    std::size_t rank = 0;
    if (!(in >> word >> name >> bias >> rank) || word != "param") throw fail("bad parameter record " + std::to_string(i));
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape)
      if (!(in >> d)) throw fail("bad shape for " + name);
    Parameter& p = ps.add(name, shape, bias != 0);
    for (double& v : p.value.values) {
      if (!(in >> word)) throw fail("truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(word.c_str(), &end);
      if (end == word.c_str() || *end != '\0') throw fail("bad number '" + word + "' in " + name);
    }
  }
  return ps;
}

}  // namespace revloc::nn

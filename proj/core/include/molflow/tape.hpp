#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "molflow/scalar_ops.hpp"

namespace molflow {

class Tape;

// Handle to a recorded scalar. Carries its value so that reading a Var never
// touches tape storage; the tape itself only keeps the edge structure needed
// for the reverse sweep.
struct Var {
  Tape* tape = nullptr;
  int32_t idx = -1;
  double v = 0.0;
};

inline double value_of(const Var& x) { return x.v; }

// Append-only record of primitive operations with parent indices and local
// partial derivatives. Appending order is a topological order, so the
// backward sweep is a single reverse pass that visits each node once.
// Single-writer: one tape per thread of computation.
class Tape {
 public:
  Tape() { edge_start_.push_back(0); }

  // Registers the trainable parameters as the first nodes on the tape.
  // Must be called on an empty (or freshly reset) tape.
  std::vector<Var> params(std::span<const double> values) {
    if (num_nodes() != 0) throw std::logic_error("Tape::params: tape not empty");
    std::vector<Var> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(leaf(v));
    n_params_ = static_cast<int32_t>(values.size());
    return out;
  }

  Var leaf(double v) {
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), v};
  }

  Var unary(double val, int32_t p, double d) {
    edge_parent_.push_back(p);
    edge_partial_.push_back(d);
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), val};
  }

  Var binary(double val, int32_t p0, double d0, int32_t p1, double d1) {
    edge_parent_.push_back(p0);
    edge_partial_.push_back(d0);
    edge_parent_.push_back(p1);
    edge_partial_.push_back(d1);
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), val};
  }

  // Fused inner products; one node with one edge per differentiable operand.
  Var dot(std::span<const Var> x, std::span<const Var> w) {
    assert(x.size() == w.size() && !x.empty());
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      acc += x[i].v * w[i].v;
      edge_parent_.push_back(x[i].idx);
      edge_partial_.push_back(w[i].v);
      edge_parent_.push_back(w[i].idx);
      edge_partial_.push_back(x[i].v);
    }
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), acc};
  }

  Var dot(std::span<const Var> x, std::span<const double> w) {
    assert(x.size() == w.size() && !x.empty());
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      acc += x[i].v * w[i];
      edge_parent_.push_back(x[i].idx);
      edge_partial_.push_back(w[i]);
    }
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), acc};
  }

  Var dot(std::span<const double> x, std::span<const Var> w) { return dot(w, x); }

  Var sum(std::span<const Var> xs) {
    assert(!xs.empty());
    double acc = 0.0;
    for (const Var& x : xs) {
      acc += x.v;
      edge_parent_.push_back(x.idx);
      edge_partial_.push_back(1.0);
    }
    edge_start_.push_back(static_cast<uint32_t>(edge_parent_.size()));
    return Var{this, static_cast<int32_t>(num_nodes() - 1), acc};
  }

  // Reverse sweep from `loss`; writes d(loss)/d(param_k) into grad_out.
  void backward(const Var& loss, std::span<double> grad_out) {
    if (loss.tape != this || loss.idx < 0 || loss.idx >= static_cast<int32_t>(num_nodes()))
      throw std::invalid_argument("Tape::backward: loss is not on this tape");
    if (grad_out.size() != static_cast<size_t>(n_params_))
      throw std::invalid_argument("Tape::backward: gradient size mismatch");
    adjoint_.assign(num_nodes(), 0.0);
    adjoint_[loss.idx] = 1.0;
    for (int32_t i = static_cast<int32_t>(num_nodes()) - 1; i >= n_params_; --i) {
      const double a = adjoint_[i];
      if (a == 0.0) continue;
      for (uint32_t e = edge_start_[i]; e < edge_start_[i + 1]; ++e)
        adjoint_[edge_parent_[e]] += a * edge_partial_[e];
    }
    for (int32_t k = 0; k < n_params_; ++k) grad_out[k] = adjoint_[k];
  }

  size_t num_nodes() const { return edge_start_.size() - 1; }
  size_t num_edges() const { return edge_parent_.size(); }
  int32_t num_params() const { return n_params_; }

  // Clears recorded nodes but keeps allocated capacity for reuse.
  void reset() {
    edge_start_.clear();
    edge_start_.push_back(0);
    edge_parent_.clear();
    edge_partial_.clear();
    n_params_ = 0;
  }

 private:
  std::vector<uint32_t> edge_start_;  // size num_nodes()+1
  std::vector<int32_t> edge_parent_;
  std::vector<double> edge_partial_;
  std::vector<double> adjoint_;
  int32_t n_params_ = 0;
};

// ---- operator overloads ----------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  return a.tape->binary(a.v + b.v, a.idx, 1.0, b.idx, 1.0);
}
inline Var operator+(const Var& a, double c) { return a.tape->unary(a.v + c, a.idx, 1.0); }
inline Var operator+(double c, const Var& a) { return a + c; }

inline Var operator-(const Var& a, const Var& b) {
  return a.tape->binary(a.v - b.v, a.idx, 1.0, b.idx, -1.0);
}
inline Var operator-(const Var& a, double c) { return a.tape->unary(a.v - c, a.idx, 1.0); }
inline Var operator-(double c, const Var& a) { return a.tape->unary(c - a.v, a.idx, -1.0); }
inline Var operator-(const Var& a) { return a.tape->unary(-a.v, a.idx, -1.0); }

inline Var operator*(const Var& a, const Var& b) {
  return a.tape->binary(a.v * b.v, a.idx, b.v, b.idx, a.v);
}
inline Var operator*(const Var& a, double c) { return a.tape->unary(a.v * c, a.idx, c); }
inline Var operator*(double c, const Var& a) { return a * c; }

inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.v;
  return a.tape->binary(a.v * inv, a.idx, inv, b.idx, -a.v * inv * inv);
}
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& a) {
  const double inv = 1.0 / a.v;
  return a.tape->unary(c * inv, a.idx, -c * inv * inv);
}

inline Var exp(const Var& a) {
  const double e = std::exp(a.v);
  return a.tape->unary(e, a.idx, e);
}
inline Var log(const Var& a) { return a.tape->unary(std::log(a.v), a.idx, 1.0 / a.v); }
inline Var log1p(const Var& a) {
  return a.tape->unary(std::log1p(a.v), a.idx, 1.0 / (1.0 + a.v));
}
inline Var sqrt(const Var& a) {
  const double r = std::sqrt(a.v);
  return a.tape->unary(r, a.idx, 0.5 / r);
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.v);
  return a.tape->unary(t, a.idx, 1.0 - t * t);
}
inline Var sigmoid(const Var& a) {
  const double s = sigmoid(a.v);
  return a.tape->unary(s, a.idx, s * (1.0 - s));
}
inline Var softplus(const Var& a) {
  return a.tape->unary(softplus(a.v), a.idx, sigmoid(a.v));
}
inline Var log_sigmoid(const Var& a) {
  return a.tape->unary(log_sigmoid(a.v), a.idx, sigmoid(-a.v));
}
// Subgradient 0 where the floor binds.
inline Var max_floor(const Var& a, double floor) {
  return a.v > floor ? a.tape->unary(a.v, a.idx, 1.0) : a.tape->unary(floor, a.idx, 0.0);
}

// Free-function forms so generic kernels can call dot(...) unqualified.
inline Var dot(std::span<const Var> x, std::span<const Var> w) { return x[0].tape->dot(x, w); }
inline Var dot(std::span<const Var> x, std::span<const double> w) { return x[0].tape->dot(x, w); }
inline Var dot(std::span<const double> x, std::span<const Var> w) { return w[0].tape->dot(x, w); }

}  // namespace molflow

#pragma once

#include <cmath>
#include <span>

namespace molflow {

// Shared scalar vocabulary used by the numeric kernels. The kernels are
// templates over the scalar type: instantiated with double they evaluate
// directly, instantiated with tape::Var they record onto a differentiation
// tape (see tape.hpp, which provides the Var overloads of these functions).

inline double value_of(double x) { return x; }

// Stable in both tails; no overflow for |z| up to ~745 and beyond (the
// exponential of a large negative argument underflows to 0 harmlessly).
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

// ln(1 + e^z) without overflow.
inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// ln sigmoid(z) = -softplus(-z)
inline double log_sigmoid(double z) { return -softplus(-z); }

// max(x, floor) with a hard lower bound; the tape version propagates zero
// gradient when the floor binds.
inline double max_floor(double x, double floor) { return x > floor ? x : floor; }

inline double dot(std::span<const double> x, std::span<const double> w) {
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i];
  return acc;
}

}  // namespace molflow

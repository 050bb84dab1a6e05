#pragma once

#include <cmath>
#include <stdexcept>

#include "molflow/rng.hpp"
#include "molflow/scalar_ops.hpp"

namespace molflow {

// Logistic distribution with location mu and scale s > 0.
struct Logistic {
  double mu = 0.0;
  double s = 1.0;

  Logistic() = default;
  Logistic(double mu_, double s_) : mu(mu_), s(s_) {
    if (!(s > 0.0)) throw std::invalid_argument("Logistic: scale must be positive");
  }
};

// Generic kernels, usable with double or tape::Var scalars.

template <class S>
S logistic_cdf_k(S z) {
  return sigmoid(z);
}

// ln f(z)/s with z = (u - mu)/s; stable in both tails. P may be a narrower
// scalar type than S (e.g. plain-double parameters with a taped argument).
template <class S, class P>
S logistic_log_pdf_z(S z, P log_s) {
  return -z - 2.0 * softplus(-z) - log_s;
}

inline double logistic_cdf(double u, const Logistic& c) {
  return sigmoid((u - c.mu) / c.s);
}

inline double logistic_log_pdf(double u, const Logistic& c) {
  const double z = (u - c.mu) / c.s;
  return -z - 2.0 * softplus(-z) - std::log(c.s);
}

// Standard logistic log-density, the base distribution of every flow stack.
inline double std_logistic_log_pdf(double u) { return -u - 2.0 * softplus(-u); }

// Inverse-CDF sampling: mu + s*(ln v - ln(1-v)) with v uniform in (0,1).
inline double sample_logistic(Rng& rng, const Logistic& c) {
  const double v = rng.uniform01();
  return c.mu + c.s * (std::log(v) - std::log1p(-v));
}

// Differential entropy: ln s + 2.
inline double logistic_entropy(const Logistic& c) { return std::log(c.s) + 2.0; }

}  // namespace molflow

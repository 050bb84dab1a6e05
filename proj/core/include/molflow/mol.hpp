#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "molflow/logistic.hpp"
#include "molflow/scalar_ops.hpp"

namespace molflow {

// Mixture of N logistics: convex weights, locations and positive scales.
class MoLParams {
 public:
  MoLParams(std::vector<double> weights, std::vector<double> mus, std::vector<double> scales);

  int size() const { return static_cast<int>(weights_.size()); }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> log_weights() const { return log_weights_; }
  std::span<const double> mus() const { return mus_; }
  std::span<const double> scales() const { return scales_; }

 private:
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> mus_;
  std::vector<double> scales_;
};

// ---- generic kernels -------------------------------------------------------
// S is double or tape::Var. Weight spans may be a different scalar type than
// the evaluation point (e.g. teacher parameters held constant while the
// argument is on tape), hence the two type parameters.

template <class S, class P>
S mol_cdf_k(S u, std::span<const P> w, std::span<const P> mu, std::span<const P> s) {
  S acc = w[0] * sigmoid((u - mu[0]) / s[0]);
  for (size_t i = 1; i < w.size(); ++i) acc = acc + w[i] * sigmoid((u - mu[i]) / s[i]);
  return acc;
}

// log sum_i exp(terms[i]) with the pivot detached (its derivative cancels).
template <class S>
S log_sum_exp_k(std::span<const S> terms) {
  using std::exp;
  using std::log;
  double m = -std::numeric_limits<double>::infinity();
  for (const S& t : terms) m = std::max(m, value_of(t));
  if (!std::isfinite(m)) return terms[0];  // all -inf: propagate
  S acc = exp(terms[0] - m);
  for (size_t i = 1; i < terms.size(); ++i) acc = acc + exp(terms[i] - m);
  return log(acc) + m;
}

template <class S, class P>
S mol_log_pdf_k(S u, std::span<const P> logw, std::span<const P> mu, std::span<const P> s) {
  using std::log;
  std::vector<S> terms;
  terms.reserve(logw.size());
  for (size_t i = 0; i < logw.size(); ++i) {
    S z = (u - mu[i]) / s[i];
    terms.push_back(logw[i] + logistic_log_pdf_z(z, log(s[i])));
  }
  return log_sum_exp_k(std::span<const S>(terms));
}

// (ln C, ln(1-C)). The complement is evaluated as the mirrored mixture
// sum_i pi_i * sigmoid(-z_i), so both values stay finite for any finite u
// instead of saturating through 1 - C.
template <class S, class P>
std::pair<S, S> mol_log_cdf_pair_k(S u, std::span<const P> logw, std::span<const P> mu,
                                   std::span<const P> s) {
  std::vector<S> lo, hi;
  lo.reserve(logw.size());
  hi.reserve(logw.size());
  for (size_t i = 0; i < logw.size(); ++i) {
    S z = (u - mu[i]) / s[i];
    lo.push_back(logw[i] + log_sigmoid(z));
    hi.push_back(logw[i] + log_sigmoid(-z));
  }
  return {log_sum_exp_k(std::span<const S>(lo)), log_sum_exp_k(std::span<const S>(hi))};
}

// ---- double front-ends -----------------------------------------------------

// CDF in (0, 1); clamped only at the extreme representable tails.
double mol_cdf(double u, const MoLParams& p);

double mol_log_pdf(double u, const MoLParams& p);

std::pair<double, double> mol_log_cdf_pair(double u, const MoLParams& p);

// Unique root of mol_cdf(u) = q found by bracketing bisection with Newton
// refinement. Throws NumericalError if the iteration cap is reached before
// |mol_cdf(u) - q| < tol.
double mol_quantile(double q, const MoLParams& p, double tol, int max_iter = 200);

// Draws a component by weight, then samples that logistic.
double sample_mol(Rng& rng, const MoLParams& p);

}  // namespace molflow

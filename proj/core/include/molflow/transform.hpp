#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "molflow/mol.hpp"

namespace molflow {

enum class TransformKind { affine, non_affine };

// Per-timestep transform parameterization: affine scale (stored as its log)
// and shift, plus the mixture driving the CDF-logit part for the non-affine
// kind.
struct TransformParams {
  double log_alpha = 0.0;
  double beta = 0.0;
  std::optional<MoLParams> mol;  // absent for the affine kind

  TransformKind kind() const {
    return mol.has_value() ? TransformKind::non_affine : TransformKind::affine;
  }
};

// Generic per-step parameters for kernel code. Both weight and log-weight
// views of the mixture are kept so CDF and log-density paths avoid redundant
// exp/log round trips.
template <class S>
struct StepParams {
  S log_alpha;
  S beta;
  std::vector<S> w, logw, mu, s;  // empty for affine
};

template <class S>
struct FwdResult {
  S x;
  S log_det;  // ln of the (positive) derivative dx/du
};

// x = exp(log_alpha) * u + beta
template <class S>
FwdResult<S> affine_forward_k(S u, const StepParams<S>& p) {
  using std::exp;
  return {exp(p.log_alpha) * u + p.beta, p.log_alpha};
}

// x = logit(MoLCDF(u)) * alpha + beta, evaluated through the log-CDF pair so
// both tails stay finite. The log-derivative follows from the chain rule:
//   d/du [logit(C(u)) * alpha + beta] = alpha * C'(u) / (C (1-C)).
template <class S>
FwdResult<S> nonaffine_forward_k(S u, const StepParams<S>& p) {
  using std::exp;
  auto [log_c, log_1mc] =
      mol_log_cdf_pair_k<S, S>(u, std::span<const S>(p.logw), std::span<const S>(p.mu),
                               std::span<const S>(p.s));
  S logit = log_c - log_1mc;
  S x = logit * exp(p.log_alpha) + p.beta;
  S log_pdf = mol_log_pdf_k<S, S>(u, std::span<const S>(p.logw), std::span<const S>(p.mu),
                                  std::span<const S>(p.s));
  S log_det = p.log_alpha + log_pdf - log_c - log_1mc;
  return {x, log_det};
}

template <class S>
FwdResult<S> transform_forward_k(S u, const StepParams<S>& p, TransformKind kind) {
  return kind == TransformKind::affine ? affine_forward_k(u, p) : nonaffine_forward_k(u, p);
}

// ---- double front-ends -----------------------------------------------------

StepParams<double> to_step_params(const TransformParams& tp);

// (x, log_det_term)
std::pair<double, double> affine_forward(double u, const TransformParams& tp);
std::pair<double, double> nonaffine_forward(double u, const TransformParams& tp);

// u such that nonaffine_forward(u).x == x, via the mixture quantile at
// sigmoid((x - beta) / alpha). Exposed for testing; synthesis never inverts.
double nonaffine_inverse(double x, const TransformParams& tp, double tol);

double transform_inverse(double x, const TransformParams& tp, double tol);

}  // namespace molflow

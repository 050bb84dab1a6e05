#include "molflow/transform.hpp"

#include <cmath>
#include <stdexcept>

#include "molflow/errors.hpp"

namespace molflow {

StepParams<double> to_step_params(const TransformParams& tp) {
  StepParams<double> p;
  p.log_alpha = tp.log_alpha;
  p.beta = tp.beta;
  if (tp.mol) {
    const MoLParams& m = *tp.mol;
    p.w.assign(m.weights().begin(), m.weights().end());
    p.logw.assign(m.log_weights().begin(), m.log_weights().end());
    p.mu.assign(m.mus().begin(), m.mus().end());
    p.s.assign(m.scales().begin(), m.scales().end());
  }
  return p;
}

std::pair<double, double> affine_forward(double u, const TransformParams& tp) {
  if (!std::isfinite(tp.log_alpha)) throw std::invalid_argument("affine_forward: log_alpha not finite");
  auto r = affine_forward_k(u, to_step_params(tp));
  return {r.x, r.log_det};
}

std::pair<double, double> nonaffine_forward(double u, const TransformParams& tp) {
  if (!tp.mol) throw std::invalid_argument("nonaffine_forward: mixture parameters absent");
  auto r = nonaffine_forward_k(u, to_step_params(tp));
  return {r.x, r.log_det};
}

double nonaffine_inverse(double x, const TransformParams& tp, double tol) {
  if (!tp.mol) throw std::invalid_argument("nonaffine_inverse: mixture parameters absent");
  if (!(tol > 0.0)) throw std::invalid_argument("nonaffine_inverse: tol must be positive");
  const MoLParams& m = *tp.mol;
  const double target = (x - tp.beta) / std::exp(tp.log_alpha);  // logit(MoLCDF(u))

  // Root-find logit(MoLCDF(u)) = target in log space; sigmoid(target) would
  // saturate to 1.0 in double for target > ~37 and lose the tails. The
  // residual |h| bounds the forward error: |x(u) - x| = alpha * |h|.
  auto logit_cdf = [&](double u) {
    auto [lc, l1mc] = mol_log_cdf_pair(u, m);
    return lc - l1mc;
  };
  double lo = m.mus()[0], hi = m.mus()[0], smax = m.scales()[0];
  for (int i = 0; i < m.size(); ++i) {
    lo = std::min(lo, m.mus()[i]);
    hi = std::max(hi, m.mus()[i]);
    smax = std::max(smax, m.scales()[i]);
  }
  double pad = smax * std::max(40.0, std::abs(target) + 10.0);
  lo -= pad;
  hi += pad;
  const int max_iter = 200;
  int iter = 0;
  while (logit_cdf(lo) > target && iter++ < max_iter) lo -= pad, pad *= 2.0;
  while (logit_cdf(hi) < target && iter++ < max_iter) hi += pad, pad *= 2.0;

  double u = 0.5 * (lo + hi);
  for (; iter < max_iter; ++iter) {
    auto [lc, l1mc] = mol_log_cdf_pair(u, m);
    const double h = (lc - l1mc) - target;
    if (std::abs(h) < tol) return u;
    if (h > 0.0)
      hi = u;
    else
      lo = u;
    const double slope = std::exp(mol_log_pdf(u, m) - lc - l1mc);
    double next = u - h / slope;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    u = next;
  }
  throw NumericalError("nonaffine_inverse: iteration cap reached");
}

double transform_inverse(double x, const TransformParams& tp, double tol) {
  if (tp.kind() == TransformKind::affine) return (x - tp.beta) / std::exp(tp.log_alpha);
  return nonaffine_inverse(x, tp, tol);
}

}  // namespace molflow

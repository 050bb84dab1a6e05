#include "molflow/mol.hpp"

#include <cmath>

#include "molflow/errors.hpp"

namespace molflow {

MoLParams::MoLParams(std::vector<double> weights, std::vector<double> mus,
                     std::vector<double> scales)
    : weights_(std::move(weights)), mus_(std::move(mus)), scales_(std::move(scales)) {
  const size_t n = weights_.size();
  if (n < 1) throw std::invalid_argument("MoLParams: need at least one component");
  if (mus_.size() != n || scales_.size() != n)
    throw std::invalid_argument("MoLParams: component vectors must have equal length");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("MoLParams: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("MoLParams: weights must sum to 1");
  for (double s : scales_) {
    if (!(s > 0.0)) throw std::invalid_argument("MoLParams: scales must be positive");
  }
  log_weights_.resize(n);
  for (size_t i = 0; i < n; ++i)
    log_weights_[i] = weights_[i] > 0.0 ? std::log(weights_[i])
                                        : -std::numeric_limits<double>::infinity();
}

double mol_cdf(double u, const MoLParams& p) {
  double c = mol_cdf_k<double, double>(u, p.weights(), p.mus(), p.scales());
  // Final safety clamp only; all tail-sensitive work happens in log space.
  c = std::min(c, 1.0 - std::numeric_limits<double>::epsilon());
  return std::max(c, 1e-300);
}

double mol_log_pdf(double u, const MoLParams& p) {
  return mol_log_pdf_k<double, double>(u, p.log_weights(), p.mus(), p.scales());
}

std::pair<double, double> mol_log_cdf_pair(double u, const MoLParams& p) {
  return mol_log_cdf_pair_k<double, double>(u, p.log_weights(), p.mus(), p.scales());
}

double mol_quantile(double q, const MoLParams& p, double tol, int max_iter) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("mol_quantile: q must be in (0,1)");
  if (!(tol > 0.0)) throw std::invalid_argument("mol_quantile: tol must be positive");

  // Initial bracket from component extremes, widened geometrically if needed.
  double lo = p.mus()[0], hi = p.mus()[0], smax = p.scales()[0];
  for (int i = 0; i < p.size(); ++i) {
    lo = std::min(lo, p.mus()[i]);
    hi = std::max(hi, p.mus()[i]);
    smax = std::max(smax, p.scales()[i]);
  }
  double pad = 40.0 * smax;
  lo -= pad;
  hi += pad;
  int iter = 0;
  while (mol_cdf(lo, p) > q && iter++ < max_iter) lo -= pad, pad *= 2.0;
  while (mol_cdf(hi, p) < q && iter++ < max_iter) hi += pad, pad *= 2.0;

  double u = 0.5 * (lo + hi);
  for (; iter < max_iter; ++iter) {
    const double c = mol_cdf(u, p);
    const double err = c - q;
    // In deep tails |err| < tol long before u is located, because the CDF is
    // nearly flat there; keep refining until the bracket pins u as well.
    if (std::abs(err) < tol && (err == 0.0 || hi - lo < 1e-9 * (1.0 + std::abs(u)))) return u;
    if (err > 0.0)
      hi = u;
    else
      lo = u;
    // Newton step off the density; fall back to bisection when it leaves
    // the bracket or the density is too flat to trust.
    const double pdf = std::exp(mol_log_pdf(u, p));
    double next = u - err / pdf;
    if (!(std::isfinite(next)) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    u = next;
  }
  throw NumericalError("mol_quantile: iteration cap reached (pathological parameters?)");
}

double sample_mol(Rng& rng, const MoLParams& p) {
  const double v = rng.uniform01();
  double acc = 0.0;
  int pick = p.size() - 1;
  for (int i = 0; i < p.size(); ++i) {
    acc += p.weights()[i];
    if (v <= acc) {
      pick = i;
      break;
    }
  }
  return sample_logistic(rng, Logistic(p.mus()[pick], p.scales()[pick]));
}

}  // namespace molflow

#include "molflow/conditioner.hpp"

#include <cmath>

namespace molflow {

CondNetLayout register_net(ParamVector& pv, const std::string& prefix, const CondNetSpec& spec) {
  const int C = spec.channels;
  const int K = spec.kernel_size;
  CondNetLayout lay;
  lay.base = pv.size();
  lay.in_w = pv.add_slice(prefix + ".in_w", C);
  lay.in_b = pv.add_slice(prefix + ".in_b", C);
  lay.layers.resize(spec.layers);
  for (int l = 0; l < spec.layers; ++l) {
    const std::string lp = prefix + ".l" + std::to_string(l);
    auto& ll = lay.layers[l];
    ll.conv_w = pv.add_slice(lp + ".conv_w", 2 * C * K * C);
    ll.conv_b = pv.add_slice(lp + ".conv_b", 2 * C);
    ll.cond_w = pv.add_slice(lp + ".cond_w", 2 * C * spec.cond_channels);
    ll.res_w = pv.add_slice(lp + ".res_w", C * C);
    ll.res_b = pv.add_slice(lp + ".res_b", C);
    ll.skip_w = pv.add_slice(lp + ".skip_w", C * C);
    ll.skip_b = pv.add_slice(lp + ".skip_b", C);
  }
  lay.head_w = pv.add_slice(prefix + ".head_w", spec.out_dim * C);
  lay.head_b = pv.add_slice(prefix + ".head_b", spec.out_dim);
  lay.total = pv.size() - lay.base;
  return lay;
}

namespace {
void fill_uniform(std::span<double> params, int offset, int len, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int i = 0; i < len; ++i) params[offset + i] = rng.uniform(-bound, bound);
}
}  // namespace

void init_net_params(std::span<double> params, const CondNetLayout& lay, const CondNetSpec& spec,
                     Rng& rng) {
  const int C = spec.channels;
  const int K = spec.kernel_size;
  fill_uniform(params, lay.in_w, C, 1, rng);
  for (const auto& ll : lay.layers) {
    fill_uniform(params, ll.conv_w, 2 * C * K * C, K * C, rng);
    fill_uniform(params, ll.cond_w, 2 * C * spec.cond_channels, spec.cond_channels, rng);
    fill_uniform(params, ll.res_w, C * C, C, rng);
    fill_uniform(params, ll.skip_w, C * C, C, rng);
  }
  // Biases stay zero; head weights and bias stay zero so the raw outputs
  // start at zero and every transform starts at identity.
}

std::vector<double> condition(const CondNetSpec& spec, const CondNetLayout& lay,
                              std::span<const double> params, std::span<const double> noise,
                              const CondFrames& cond) {
  if (static_cast<int>(noise.size()) != cond.length)
    throw std::invalid_argument("condition: noise/conditioning length mismatch");
  std::vector<double> shifted(noise.size(), 0.0);
  for (size_t t = 1; t < noise.size(); ++t) shifted[t] = noise[t - 1];
  std::vector<double> raw;
  cond_net_forward<double, double>(spec, lay, params.data(), std::span<const double>(shifted),
                                   cond, raw);
  return raw;
}

TransformParams constrain(std::span<const double> raw, TransformKind kind, int n_mixtures) {
  StepParams<double> p = constrain_step<double>(raw, kind, n_mixtures);
  TransformParams tp;
  tp.log_alpha = p.log_alpha;
  tp.beta = p.beta;
  if (kind == TransformKind::non_affine) {
    // Renormalize exactly: the softmax sums to 1 only within rounding.
    double sum = 0.0;
    for (double w : p.w) sum += w;
    for (double& w : p.w) w /= sum;
    tp.mol.emplace(p.w, p.mu, p.s);
  }
  return tp;
}

}  // namespace molflow

#include "molflow/flow.hpp"

#include <cmath>

namespace molflow {

FlowStack::FlowStack(std::vector<ConditionerConfig> layer_cfgs, int cond_channels,
                     uint64_t init_seed)
    : cond_channels_(cond_channels) {
  if (layer_cfgs.empty()) throw std::invalid_argument("FlowStack: need at least one layer");
  Rng rng(init_seed);
  layers_.reserve(layer_cfgs.size());
  for (size_t i = 0; i < layer_cfgs.size(); ++i) {
    FlowLayer fl;
    fl.cfg = layer_cfgs[i];
    fl.net = net_spec_for(fl.cfg, cond_channels);
    fl.layout = register_net(params_, "flow" + std::to_string(i), fl.net);
    layers_.push_back(std::move(fl));
  }
  for (const FlowLayer& fl : layers_) init_net_params(params_.values(), fl.layout, fl.net, rng);
  // Spread the mixture-location head biases: identical components receive
  // identical gradients and would stay fused forever. The spread is small,
  // so every layer still starts near the identity.
  for (const FlowLayer& fl : layers_) {
    const int n = fl.cfg.n_mixtures;
    if (fl.cfg.kind != TransformKind::non_affine || n < 2) continue;
    for (int i = 0; i < n; ++i)
      params_.values()[fl.layout.head_b + 2 + n + i] =
          -0.2 + 0.4 * static_cast<double>(i) / (n - 1);
  }
}

bool FlowStack::all_affine() const {
  for (const FlowLayer& fl : layers_)
    if (fl.cfg.kind != TransformKind::affine) return false;
  return true;
}

TransformParams to_transform_params(const StepParams<double>& p, TransformKind kind) {
  TransformParams tp;
  tp.log_alpha = p.log_alpha;
  tp.beta = p.beta;
  if (kind == TransformKind::non_affine) {
    std::vector<double> w = p.w;
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    tp.mol.emplace(w, p.mu, p.s);
  }
  return tp;
}

StackResult stack_forward(std::span<const double> noise, const CondFrames& cond,
                          const FlowStack& stack) {
  auto out = stack_forward_k<double, double>(stack, stack.params().values().data(), noise, cond,
                                             0.0);
  StackResult r;
  r.x = std::move(out.x);
  r.log_det = std::move(out.log_det);
  r.layer_log_det = std::move(out.layer_log_det);
  r.layer_params.resize(stack.layers().size());
  for (size_t li = 0; li < stack.layers().size(); ++li) {
    r.layer_params[li].reserve(out.layer_params[li].size());
    for (const auto& p : out.layer_params[li])
      r.layer_params[li].push_back(to_transform_params(p, stack.layers()[li].cfg.kind));
  }
  return r;
}

std::vector<double> student_log_density(std::span<const double> x_from_forward,
                                        std::span<const double> noise,
                                        std::span<const double> log_det, const Logistic& base) {
  if (x_from_forward.size() != noise.size() || noise.size() != log_det.size())
    throw std::invalid_argument("student_log_density: length mismatch");
  std::vector<double> out(noise.size());
  for (size_t t = 0; t < noise.size(); ++t)
    out[t] = logistic_log_pdf(noise[t], base) - log_det[t];
  return out;
}

std::vector<double> stack_inverse(std::span<const double> x, const CondFrames& cond,
                                  const FlowStack& stack, double tol) {
  const int T = static_cast<int>(x.size());
  if (cond.length != T) throw std::invalid_argument("stack_inverse: length mismatch");
  const size_t L = stack.layers().size();
  const double* pb = stack.params().values().data();

  std::vector<CondNetState<double, double>> states;
  states.reserve(L);
  for (const FlowLayer& fl : stack.layers()) states.emplace_back(fl.net, fl.layout, pb, cond);

  // y[li] is the input sequence of layer li; y[L] = x.
  std::vector<std::vector<double>> y(L + 1, std::vector<double>(T, 0.0));
  std::vector<double> raw;
  for (int t = 0; t < T; ++t) {
    y[L][t] = x[t];
    std::vector<TransformParams> step_tp(L);
    for (size_t li = 0; li < L; ++li) {
      const FlowLayer& fl = stack.layers()[li];
      raw.resize(fl.net.out_dim);
      const double shifted = t == 0 ? 0.0 : y[li][t - 1];
      states[li].step(shifted, raw);
      step_tp[li] = constrain(raw, fl.cfg.kind, fl.cfg.n_mixtures);
    }
    for (size_t li = L; li-- > 0;)
      y[li][t] = transform_inverse(y[li + 1][t], step_tp[li], tol);
  }
  return y[0];
}

}  // namespace molflow

#pragma once

#include <span>
#include <string>
#include <vector>

#include "molflow/conditioner.hpp"
#include "molflow/logistic.hpp"
#include "molflow/param_vector.hpp"
#include "molflow/transform.hpp"

namespace molflow {

struct FlowLayer {
  ConditionerConfig cfg;
  CondNetSpec net;
  CondNetLayout layout;
};

// Ordered autoregressive flow layers over a standard-logistic base. All
// trainable parameters live in one flat ParamVector with named slices
// ("flow0.l0.conv_w", ...).
class FlowStack {
 public:
  FlowStack(std::vector<ConditionerConfig> layer_cfgs, int cond_channels, uint64_t init_seed);

  const std::vector<FlowLayer>& layers() const { return layers_; }
  int cond_channels() const { return cond_channels_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  const Logistic& base() const { return base_; }
  bool all_affine() const;

 private:
  std::vector<FlowLayer> layers_;
  int cond_channels_;
  ParamVector params_;
  Logistic base_{0.0, 1.0};
};

// Generic forward through the stack. Layer k's conditioner sees the shifted
// form of its own input sequence, so the Jacobian stays lower-triangular and
// log_det is the per-step sum of layer log-derivative terms.
template <class A>
struct StackOut {
  std::vector<A> x;
  std::vector<A> log_det;
  std::vector<std::vector<A>> layer_log_det;            // [layer][t]
  std::vector<std::vector<StepParams<A>>> layer_params;  // cached parametrization
};

template <class A, class W>
StackOut<A> stack_forward_k(const FlowStack& stack, const W* pb, std::span<const A> noise,
                            const CondFrames& cond, const A& zero) {
  const int T = static_cast<int>(noise.size());
  if (cond.length != T)
    throw std::invalid_argument("stack_forward: noise/conditioning length mismatch");
  StackOut<A> out;
  out.x.assign(noise.begin(), noise.end());
  out.layer_log_det.resize(stack.layers().size());
  out.layer_params.resize(stack.layers().size());

  std::vector<A> shifted(static_cast<size_t>(T));
  std::vector<A> raw;
  for (size_t li = 0; li < stack.layers().size(); ++li) {
    const FlowLayer& fl = stack.layers()[li];
    shifted[0] = zero;
    for (int t = 1; t < T; ++t) shifted[t] = out.x[t - 1];
    cond_net_forward<A, W>(fl.net, fl.layout, pb, std::span<const A>(shifted), cond, raw);
    auto& lld = out.layer_log_det[li];
    auto& lp = out.layer_params[li];
    lld.reserve(T);
    lp.reserve(T);
    for (int t = 0; t < T; ++t) {
      std::span<const A> raw_t(raw.data() + static_cast<size_t>(t) * fl.net.out_dim,
                               static_cast<size_t>(fl.net.out_dim));
      lp.push_back(constrain_step<A>(raw_t, fl.cfg.kind, fl.cfg.n_mixtures));
      auto r = transform_forward_k<A>(out.x[t], lp.back(), fl.cfg.kind);
      out.x[t] = r.x;
      lld.push_back(r.log_det);
    }
  }
  out.log_det.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    A acc = out.layer_log_det[0][t];
    for (size_t li = 1; li < stack.layers().size(); ++li)
      acc = acc + out.layer_log_det[li][t];
    out.log_det[t] = acc;
  }
  return out;
}

// Plain-double front-end with the cached per-step parameters exposed.
struct StackResult {
  std::vector<double> x;
  std::vector<double> log_det;
  std::vector<std::vector<double>> layer_log_det;
  std::vector<std::vector<TransformParams>> layer_params;
};

StackResult stack_forward(std::span<const double> noise, const CondFrames& cond,
                          const FlowStack& stack);

// Change of variables: per-step ln p_S = ln p_u(u_t) - log_det_t.
std::vector<double> student_log_density(std::span<const double> x_from_forward,
                                        std::span<const double> noise,
                                        std::span<const double> log_det, const Logistic& base);

// Sequential per-step inversion of the full stack (testing aid; synthesis
// only ever runs the forward pass).
std::vector<double> stack_inverse(std::span<const double> x, const CondFrames& cond,
                                  const FlowStack& stack, double tol);

// Builds the spec-facing TransformParams from cached kernel parameters.
TransformParams to_transform_params(const StepParams<double>& p, TransformKind kind);

}  // namespace molflow

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "molflow/param_vector.hpp"
#include "molflow/rng.hpp"
#include "molflow/scalar_ops.hpp"
#include "molflow/transform.hpp"

namespace molflow {

// Conditioner shape for one flow layer.
struct ConditionerConfig {
  int layers = 3;
  int channels = 16;
  int kernel_size = 2;
  int dilation_cycle = 8;
  int n_mixtures = 10;
  TransformKind kind = TransformKind::non_affine;

  void validate() const {
    if (layers < 1 || channels < 1 || kernel_size < 2 || dilation_cycle < 1 || n_mixtures < 1)
      throw std::invalid_argument("ConditionerConfig: invalid sizes");
  }
  int raw_out_dim() const {
    return kind == TransformKind::affine ? 2 : 2 + 3 * n_mixtures;
  }
};

// Per-sample conditioning features, channels-fastest layout.
struct CondFrames {
  int length = 0;
  int channels = 0;
  std::vector<double> v;

  std::span<const double> row(int t) const {
    return {v.data() + static_cast<size_t>(t) * channels, static_cast<size_t>(channels)};
  }
  static CondFrames zeros(int length, int channels) {
    return {length, channels, std::vector<double>(static_cast<size_t>(length) * channels, 0.0)};
  }
  CondFrames slice(int offset, int len) const {
    CondFrames out;
    out.length = len;
    out.channels = channels;
    out.v.assign(v.begin() + static_cast<size_t>(offset) * channels,
                 v.begin() + static_cast<size_t>(offset + len) * channels);
    return out;
  }
};

// Shape of the gated residual causal conv network, independent of what the
// head outputs parameterize.
struct CondNetSpec {
  int layers = 3;
  int channels = 16;
  int kernel_size = 2;
  int dilation_cycle = 8;
  int cond_channels = 2;
  int out_dim = 2;

  int dilation(int layer) const { return 1 << (layer % dilation_cycle); }
  // Longest reach, in steps, of the conv stack over its (already shifted)
  // input sequence.
  int receptive_field() const {
    int sum = 0;
    for (int l = 0; l < layers; ++l) sum += (kernel_size - 1) * dilation(l);
    return sum + 1;
  }
};

inline CondNetSpec net_spec_for(const ConditionerConfig& cfg, int cond_channels) {
  cfg.validate();
  return {cfg.layers, cfg.channels, cfg.kernel_size, cfg.dilation_cycle, cond_channels,
          cfg.raw_out_dim()};
}

// Offsets of every weight block inside the owning ParamVector.
struct CondNetLayout {
  int in_w = 0, in_b = 0;
  struct Layer {
    int conv_w = 0, conv_b = 0, cond_w = 0, res_w = 0, res_b = 0, skip_w = 0, skip_b = 0;
  };
  std::vector<Layer> layers;
  int head_w = 0, head_b = 0;
  int base = 0, total = 0;
};

CondNetLayout register_net(ParamVector& pv, const std::string& prefix, const CondNetSpec& spec);

// Uniform +-1/sqrt(fan_in) weights, zero biases, zero head so the network
// starts as a constant zero map (every flow layer begins at identity).
void init_net_params(std::span<double> params, const CondNetLayout& lay, const CondNetSpec& spec,
                     Rng& rng);

// Incremental evaluator for the gated residual causal conv network. One
// step() call appends one input sample and yields that step's raw head
// outputs; full history is kept for the dilated taps. Used both for whole
// sequences and for ancestral sampling, where the next input depends on the
// previous output. A is the activation scalar (double or Var), W the weight
// scalar; A must be the wider of the two.
template <class A, class W>
class CondNetState {
 public:
  CondNetState(const CondNetSpec& spec, const CondNetLayout& lay, const W* pb,
               const CondFrames& cond)
      : spec_(&spec), lay_(&lay), pb_(pb), cond_(&cond), h_(spec.layers + 1) {
    if (cond.channels != spec.cond_channels)
      throw std::invalid_argument("CondNetState: conditioning channel mismatch");
    for (auto& lvl : h_) lvl.reserve(static_cast<size_t>(cond.length) * spec.channels);
    z_.resize(static_cast<size_t>(2) * spec.channels);
    gated_.resize(spec.channels);
    skip_row_.resize(spec.channels);
    pre_.resize(spec.channels);
  }

  int t() const { return t_; }

  void step(const A& input_t, std::span<A> raw_out) {
    using std::tanh;
    const CondNetSpec& spec = *spec_;
    const CondNetLayout& lay = *lay_;
    const W* pb = pb_;
    const int C = spec.channels;
    const int K = spec.kernel_size;
    const int t = t_;
    if (t >= cond_->length) throw std::invalid_argument("CondNetState: past end of conditioning");

    {
      std::span<const W> w_in(pb + lay.in_w, static_cast<size_t>(C));
      std::span<const W> b_in(pb + lay.in_b, static_cast<size_t>(C));
      for (int c = 0; c < C; ++c) h_[0].push_back(input_t * w_in[c] + b_in[c]);
    }
    bool have_skip = false;
    for (int l = 0; l < spec.layers; ++l) {
      const auto& ll = lay.layers[l];
      const int d = spec.dilation(l);
      std::span<const W> conv_b(pb + ll.conv_b, static_cast<size_t>(2) * C);
      for (int oc = 0; oc < 2 * C; ++oc) {
        std::span<const W> wrow(pb + ll.conv_w + static_cast<size_t>(oc) * K * C,
                                static_cast<size_t>(K) * C);
        A acc = dot(row(l, t), wrow.subspan(0, C)) + conv_b[oc];
        for (int k = 1; k < K; ++k) {
          const int idx = t - k * d;
          if (idx < 0) break;  // zero padding
          acc = acc + dot(row(l, idx), wrow.subspan(static_cast<size_t>(k) * C, C));
        }
        std::span<const W> wc(pb + ll.cond_w + static_cast<size_t>(oc) * spec.cond_channels,
                              static_cast<size_t>(spec.cond_channels));
        z_[oc] = acc + dot(cond_->row(t), wc);
      }
      for (int c = 0; c < C; ++c) gated_[c] = tanh(z_[c]) * sigmoid(z_[C + c]);
      std::span<const A> g(gated_);
      std::span<const W> res_b(pb + ll.res_b, static_cast<size_t>(C));
      std::span<const W> skip_b(pb + ll.skip_b, static_cast<size_t>(C));
      for (int c = 0; c < C; ++c) {
        std::span<const W> wr(pb + ll.res_w + static_cast<size_t>(c) * C, static_cast<size_t>(C));
        h_[l + 1].push_back(h_[l][static_cast<size_t>(t) * C + c] + dot(g, wr) + res_b[c]);
        std::span<const W> ws(pb + ll.skip_w + static_cast<size_t>(c) * C, static_cast<size_t>(C));
        A s = dot(g, ws) + skip_b[c];
        skip_row_[c] = have_skip ? skip_row_[c] + s : s;
      }
      have_skip = true;
    }
    for (int c = 0; c < C; ++c) pre_[c] = tanh(skip_row_[c]);
    std::span<const W> head_b(pb + lay.head_b, static_cast<size_t>(spec.out_dim));
    for (int o = 0; o < spec.out_dim; ++o) {
      std::span<const W> wh(pb + lay.head_w + static_cast<size_t>(o) * C, static_cast<size_t>(C));
      raw_out[o] = dot(std::span<const A>(pre_), wh) + head_b[o];
    }
    ++t_;
  }

 private:
  std::span<const A> row(int level, int t) const {
    const int C = spec_->channels;
    return {h_[level].data() + static_cast<size_t>(t) * C, static_cast<size_t>(C)};
  }

  const CondNetSpec* spec_;
  const CondNetLayout* lay_;
  const W* pb_;
  const CondFrames* cond_;
  std::vector<std::vector<A>> h_;  // residual streams; level 0 is the input projection
  int t_ = 0;
  std::vector<A> z_, gated_, skip_row_, pre_;
};

// Whole-sequence forward: raw[t] depends on input[<= t] and cond.row(t).
template <class A, class W>
void cond_net_forward(const CondNetSpec& spec, const CondNetLayout& lay, const W* pb,
                      std::span<const A> input, const CondFrames& cond, std::vector<A>& raw_out) {
  const int T = static_cast<int>(input.size());
  if (cond.length != T) throw std::invalid_argument("cond_net_forward: conditioning length mismatch");
  raw_out.resize(static_cast<size_t>(T) * spec.out_dim);
  CondNetState<A, W> state(spec, lay, pb, cond);
  for (int t = 0; t < T; ++t)
    state.step(input[t], std::span<A>(raw_out.data() + static_cast<size_t>(t) * spec.out_dim,
                                      static_cast<size_t>(spec.out_dim)));
}

// Link functions mapping raw head outputs to valid transform parameters:
// softmax for the mixture weights, exp with a 1e-4 floor for the scales,
// pass-through for log_alpha, beta and the component locations.
template <class A>
StepParams<A> constrain_step(std::span<const A> raw, TransformKind kind, int n_mixtures) {
  using std::exp;
  StepParams<A> p;
  p.log_alpha = raw[0];
  p.beta = raw[1];
  if (kind == TransformKind::non_affine) {
    const int n = n_mixtures;
    auto logits = raw.subspan(2, n);
    A lse = log_sum_exp_k<A>(logits);
    p.logw.reserve(n);
    p.w.reserve(n);
    p.mu.reserve(n);
    p.s.reserve(n);
    for (int i = 0; i < n; ++i) {
      p.logw.push_back(logits[i] - lse);
      p.w.push_back(exp(p.logw[i]));
    }
    for (int i = 0; i < n; ++i) p.mu.push_back(raw[2 + n + i]);
    for (int i = 0; i < n; ++i) p.s.push_back(max_floor(exp(raw[2 + 2 * n + i]), 1e-4));
  }
  return p;
}

// Density-head variant: raw holds 3N values (weights, locations, scales).
template <class A>
StepParams<A> constrain_mol_step(std::span<const A> raw, int n_mixtures) {
  using std::exp;
  StepParams<A> p{};
  const int n = n_mixtures;
  auto logits = raw.subspan(0, n);
  A lse = log_sum_exp_k<A>(logits);
  for (int i = 0; i < n; ++i) {
    p.logw.push_back(logits[i] - lse);
    p.w.push_back(exp(p.logw[i]));
  }
  for (int i = 0; i < n; ++i) p.mu.push_back(raw[n + i]);
  for (int i = 0; i < n; ++i) p.s.push_back(max_floor(exp(raw[2 * n + i]), 1e-4));
  return p;
}

// Spec-facing plain-double entry points.
std::vector<double> condition(const CondNetSpec& spec, const CondNetLayout& lay,
                              std::span<const double> params, std::span<const double> noise,
                              const CondFrames& cond);

TransformParams constrain(std::span<const double> raw, TransformKind kind, int n_mixtures);

}  // namespace molflow

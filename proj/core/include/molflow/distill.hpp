#pragma once

#include <functional>
#include <span>
#include <vector>

#include "molflow/adam.hpp"
#include "molflow/flow.hpp"
#include "molflow/rng.hpp"
#include "molflow/signal.hpp"
#include "molflow/tape.hpp"
#include "molflow/teacher.hpp"

namespace molflow {

// KLD = cross-entropy minus entropy, in nats per sequence, from a Monte
// Carlo estimate. Standard errors are over draws.
struct KldEstimate {
  double cross_entropy = 0.0;
  double entropy = 0.0;
  double kld = 0.0;  // always cross_entropy - entropy
  int n_mc_samples = 0;
  double ce_se = 0.0;
  double h_se = 0.0;
  double kld_se = 0.0;
};

struct TrainConfig {
  double lr = 1e-4;
  int batch = 4;
  int clip_len = 512;
  int iterations = 2000;
  int mc_samples = 1;
  double power_loss_weight = 1.0;
  uint64_t seed = 1;
  double clip_norm = 10.0;

  void validate() const {
    if (!(lr >= 0.0) || batch < 1 || clip_len < 1 || iterations < 1 || mc_samples < 1 ||
        power_loss_weight < 0.0 || clip_norm <= 0.0)
      throw std::invalid_argument("TrainConfig: all fields must be positive");
  }
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

// Monte Carlo cross-entropy: mean over noise draws of -sum_t ln p_T(x_t),
// x = stack_forward(noise). Transform parameters are computed once per draw.
McEstimate cross_entropy_mc(const FlowStack& student, const Teacher& teacher,
                            const CondFrames& cond, Rng& rng, int mc_samples);

// Jacobian-based entropy estimate: mean over draws of
// sum_t (-ln p_u(u_t) + log_det_t). Valid for any transform kind.
McEstimate entropy_mc(const FlowStack& student, const CondFrames& cond, Rng& rng,
                      int mc_samples);

// Exact per-sequence entropy of an affine student given its per-step log
// scales: sum_t log_alpha_t + 2D.
double entropy_affine_analytic(std::span<const double> log_alphas);

// Cross-entropy and entropy from shared draws; kld_se benefits from their
// positive correlation.
KldEstimate kld_mc(const FlowStack& student, const Teacher& teacher, const CondFrames& cond,
                   Rng& rng, int mc_samples);

// Mean squared difference between time-averaged STFT magnitude spectra.
double power_loss(std::span<const double> x, std::span<const double> target,
                  const StftConfig& cfg);

struct DistillItem {
  CondFrames cond;
  std::vector<double> target;  // may be empty when power_loss_weight == 0
};

struct StepResult {
  double kld = 0.0;      // per sequence, averaged over batch x draws
  double ce = 0.0;
  double entropy = 0.0;
  double power = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;  // pre-clip
};

// Loss (and optionally its gradient) of the full distillation objective at
// the current parameters, without updating them. The RNG is consumed
// identically either way, so re-seeding fixes the loss surface for
// finite-difference checks. Pass an empty grad_out to skip the backward
// sweep.
StepResult distill_loss(FlowStack& student, const Teacher& teacher,
                        std::span<const DistillItem> batch, const TrainConfig& cfg,
                        const StftConfig& power_cfg, Rng& rng, Tape& tape,
                        std::span<double> grad_out);

// One optimization step: estimates the KLD objective (analytic entropy
// constant when every layer is affine), adds the weighted power loss,
// backpropagates through the reparametrized samples and applies one Adam
// update. Throws NumericalError if the loss is non-finite.
StepResult distill_step(FlowStack& student, const Teacher& teacher,
                        std::span<const DistillItem> batch, const TrainConfig& cfg,
                        const StftConfig& power_cfg, Rng& rng, Adam& opt, Tape& tape);

struct DistillRecord {
  int step = 0;
  StepResult result;
};

// Full loop: samples batch items from the clip pool (random block-aligned
// crops of clip_len), runs `iterations` steps. `pool` entries whose length
// equals clip_len are used as-is.
std::vector<DistillRecord> distill_run(
    FlowStack& student, const Teacher& teacher, std::span<const TrainExample> pool,
    const TrainConfig& cfg, const StftConfig& power_cfg, int start_step = 0,
    const std::function<void(const DistillRecord&)>& on_step = nullptr);

}  // namespace molflow

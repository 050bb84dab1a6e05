#pragma once

#include <span>
#include <vector>

#include "molflow/adam.hpp"
#include "molflow/conditioner.hpp"
#include "molflow/param_vector.hpp"
#include "molflow/rng.hpp"
#include "molflow/tape.hpp"

namespace molflow {

struct TeacherConfig {
  int layers = 4;
  int channels = 16;
  int kernel_size = 2;
  int dilation_cycle = 4;
  int n_mixtures = 10;

  void validate() const {
    if (layers < 1 || channels < 1 || kernel_size < 2 || dilation_cycle < 1 || n_mixtures < 1)
      throw std::invalid_argument("TeacherConfig: invalid sizes");
  }
};

// Autoregressive density model: the same gated causal conv network as the
// flow conditioners, with a head that emits a mixture of logistics per step.
// p(x_t | x_{<t}, cond) is exact; sampling is ancestral.
class Teacher {
 public:
  Teacher(const TeacherConfig& cfg, int cond_channels, uint64_t init_seed);

  // Per-step ln p(x_t | x_{<t}); defined for any finite x.
  std::vector<double> log_density(std::span<const double> x, const CondFrames& cond) const;

  // Same, with x recorded on a tape and the teacher weights held constant.
  std::vector<Var> log_density_tape(Tape& tape, std::span<const Var> x,
                                    const CondFrames& cond) const;

  // Cached per-step mixture parameters (diagnostics and tests).
  std::vector<StepParams<double>> step_params(std::span<const double> x,
                                              const CondFrames& cond) const;

  // Ancestral sampling, output clamped to [-1, 1].
  std::vector<double> sample(Rng& rng, const CondFrames& cond) const;

  const TeacherConfig& config() const { return cfg_; }
  const CondNetSpec& net() const { return net_; }
  const CondNetLayout& layout() const { return layout_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  int cond_channels() const { return net_.cond_channels; }

 private:
  TeacherConfig cfg_;
  CondNetSpec net_;
  CondNetLayout layout_;
  ParamVector params_;
};

struct TrainExample {
  std::vector<double> x;
  CondFrames cond;
};

struct MleConfig {
  int epochs = 10;
  double lr = 1e-3;
  int batch = 4;
  uint64_t seed = 0;
  double clip_norm = 10.0;
  double holdout_frac = 0.2;
};

struct MleReport {
  double initial_val_nll = 0.0;  // nats per sample on the held-out split
  double final_val_nll = 0.0;
  std::vector<double> train_nll;  // per optimization step
  int steps = 0;
};

// Maximum-likelihood fit; throws NumericalError with diagnostics if the
// training loss becomes non-finite.
MleReport teacher_fit_mle(Teacher& teacher, std::span<const TrainExample> data,
                          const MleConfig& cfg);

}  // namespace molflow

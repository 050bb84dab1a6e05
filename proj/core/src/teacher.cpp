#include "molflow/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "molflow/errors.hpp"
#include "molflow/mol.hpp"

namespace molflow {

Teacher::Teacher(const TeacherConfig& cfg, int cond_channels, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  net_ = {cfg_.layers, cfg_.channels, cfg_.kernel_size, cfg_.dilation_cycle, cond_channels,
          3 * cfg_.n_mixtures};
  layout_ = register_net(params_, "net", net_);
  Rng rng(init_seed);
  init_net_params(params_.values(), layout_, net_, rng);
  // Spread the component-location biases; fused components share gradients
  // and a maximum-likelihood fit could never pull them apart.
  if (cfg_.n_mixtures > 1) {
    for (int i = 0; i < cfg_.n_mixtures; ++i)
      params_.values()[layout_.head_b + cfg_.n_mixtures + i] =
          -0.2 + 0.4 * static_cast<double>(i) / (cfg_.n_mixtures - 1);
  }
}

namespace {

// Shared density computation: S is double or Var, W double or Var; S must be
// the wider type.
template <class S, class W>
std::vector<S> teacher_log_density_k(const CondNetSpec& net, const CondNetLayout& lay,
                                     const W* pb, int n_mixtures, std::span<const S> x,
                                     const CondFrames& cond, const S& zero) {
  const int T = static_cast<int>(x.size());
  if (cond.length != T)
    throw std::invalid_argument("teacher_log_density: conditioning length mismatch");
  std::vector<S> shifted(static_cast<size_t>(T));
  shifted[0] = zero;
  for (int t = 1; t < T; ++t) shifted[t] = x[t - 1];
  std::vector<S> raw;
  cond_net_forward<S, W>(net, lay, pb, std::span<const S>(shifted), cond, raw);
  std::vector<S> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::span<const S> raw_t(raw.data() + static_cast<size_t>(t) * net.out_dim,
                             static_cast<size_t>(net.out_dim));
    StepParams<S> p = constrain_mol_step<S>(raw_t, n_mixtures);
    out.push_back(mol_log_pdf_k<S, S>(x[t], std::span<const S>(p.logw),
                                      std::span<const S>(p.mu), std::span<const S>(p.s)));
  }
  return out;
}

}  // namespace

std::vector<double> Teacher::log_density(std::span<const double> x, const CondFrames& cond) const {
  return teacher_log_density_k<double, double>(net_, layout_, params_.values().data(),
                                               cfg_.n_mixtures, x, cond, 0.0);
}

std::vector<Var> Teacher::log_density_tape(Tape& tape, std::span<const Var> x,
                                           const CondFrames& cond) const {
  return teacher_log_density_k<Var, double>(net_, layout_, params_.values().data(),
                                            cfg_.n_mixtures, x, cond, tape.leaf(0.0));
}

std::vector<StepParams<double>> Teacher::step_params(std::span<const double> x,
                                                     const CondFrames& cond) const {
  const int T = static_cast<int>(x.size());
  if (cond.length != T) throw std::invalid_argument("teacher step_params: length mismatch");
  std::vector<double> shifted(static_cast<size_t>(T), 0.0);
  for (int t = 1; t < T; ++t) shifted[t] = x[t - 1];
  std::vector<double> raw;
  cond_net_forward<double, double>(net_, layout_, params_.values().data(),
                                   std::span<const double>(shifted), cond, raw);
  std::vector<StepParams<double>> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::span<const double> raw_t(raw.data() + static_cast<size_t>(t) * net_.out_dim,
                                  static_cast<size_t>(net_.out_dim));
    out.push_back(constrain_mol_step<double>(raw_t, cfg_.n_mixtures));
  }
  return out;
}

std::vector<double> Teacher::sample(Rng& rng, const CondFrames& cond) const {
  const int T = cond.length;
  CondNetState<double, double> state(net_, layout_, params_.values().data(), cond);
  std::vector<double> x(static_cast<size_t>(T));
  std::vector<double> raw(static_cast<size_t>(net_.out_dim));
  double prev = 0.0;
  for (int t = 0; t < T; ++t) {
    state.step(prev, raw);
    StepParams<double> p = constrain_mol_step<double>(std::span<const double>(raw),
                                                      cfg_.n_mixtures);
    double wsum = 0.0;
    for (double w : p.w) wsum += w;
    const double pick = rng.uniform01() * wsum;
    double acc = 0.0;
    int comp = cfg_.n_mixtures - 1;
    for (int i = 0; i < cfg_.n_mixtures; ++i) {
      acc += p.w[i];
      if (pick <= acc) {
        comp = i;
        break;
      }
    }
    const double v = sample_logistic(rng, Logistic(p.mu[comp], p.s[comp]));
    x[t] = std::clamp(v, -1.0, 1.0);
    prev = x[t];
  }
  return x;
}

MleReport teacher_fit_mle(Teacher& teacher, std::span<const TrainExample> data,
                          const MleConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("teacher_fit_mle: empty dataset");
  const size_t n = data.size();
  size_t n_val = std::min<size_t>(std::max<size_t>(1, static_cast<size_t>(cfg.holdout_frac * n)),
                                  n > 1 ? n - 1 : 1);
  std::vector<size_t> train_idx, val_idx;
  for (size_t i = 0; i < n; ++i)
    (i >= n - n_val && n > 1 ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) train_idx = val_idx;

  auto val_nll = [&]() {
    double total = 0.0;
    size_t count = 0;
    for (size_t i : val_idx) {
      auto ld = teacher.log_density(data[i].x, data[i].cond);
      for (double v : ld) total -= v;
      count += ld.size();
    }
    return total / static_cast<double>(count);
  };

  MleReport report;
  report.initial_val_nll = val_nll();

  Rng rng(cfg.seed);
  Adam opt(teacher.params().values().size(), {cfg.lr});
  Tape tape;
  std::vector<double> grad(teacher.params().values().size());

  const int steps_per_epoch =
      static_cast<int>((train_idx.size() + cfg.batch - 1) / cfg.batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic shuffle per epoch.
    std::vector<size_t> order = train_idx;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int64_t>(i) - 1)]);

    for (int step = 0; step < steps_per_epoch; ++step) {
      tape.reset();
      std::vector<Var> pv = tape.params(teacher.params().values());
      Var loss{};
      bool have_loss = false;
      size_t samples = 0;
      for (int b = 0; b < cfg.batch; ++b) {
        const TrainExample& ex = data[order[(static_cast<size_t>(step) * cfg.batch + b) % order.size()]];
        std::vector<Var> x_vars;
        x_vars.reserve(ex.x.size());
        for (double v : ex.x) x_vars.push_back(tape.leaf(v));
        auto ld = teacher_log_density_k<Var, Var>(teacher.net(), teacher.layout(), pv.data(),
                                                  teacher.config().n_mixtures,
                                                  std::span<const Var>(x_vars), ex.cond,
                                                  tape.leaf(0.0));
        Var clip_nll = -tape.sum(ld);
        loss = have_loss ? loss + clip_nll : clip_nll;
        have_loss = true;
        samples += ex.x.size();
      }
      loss = loss / static_cast<double>(samples);
      if (!std::isfinite(loss.v)) {
        std::ostringstream oss;
        oss << "teacher_fit_mle: non-finite NLL at epoch " << epoch << " step " << step;
        throw NumericalError(oss.str());
      }
      tape.backward(loss, grad);
      clip_global_norm(grad, cfg.clip_norm);
      opt.step(teacher.params().values(), grad);
      report.train_nll.push_back(loss.v);
      ++report.steps;
    }
  }
  report.final_val_nll = val_nll();
  return report;
}

}  // namespace molflow

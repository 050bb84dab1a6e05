#include "molflow/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "molflow/errors.hpp"

namespace molflow {

namespace {

McEstimate summarize(const std::vector<double>& xs) {
  McEstimate e;
  e.n = static_cast<int>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / e.n;
  if (e.n > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(sq / (static_cast<double>(e.n) - 1.0) / e.n);
  }
  return e;
}

std::vector<double> draw_noise(Rng& rng, const Logistic& base, int len) {
  std::vector<double> u(len);
  for (double& v : u) v = sample_logistic(rng, base);
  return u;
}

// Windowed DFT tables with the Hann window folded in.
struct DftTables {
  int n = 0, bins = 0;
  std::vector<double> wcos, wsin;  // [bins][n]

  static DftTables build(const StftConfig& cfg) {
    cfg.validate();
    DftTables t;
    t.n = cfg.fft_bins;
    t.bins = cfg.bins();
    const std::vector<double> win = hann_window(t.n);
    t.wcos.resize(static_cast<size_t>(t.bins) * t.n);
    t.wsin.resize(static_cast<size_t>(t.bins) * t.n);
    for (int k = 0; k < t.bins; ++k) {
      for (int i = 0; i < t.n; ++i) {
        const double ang = -2.0 * std::numbers::pi * k * i / t.n;
        t.wcos[static_cast<size_t>(k) * t.n + i] = win[i] * std::cos(ang);
        t.wsin[static_cast<size_t>(k) * t.n + i] = win[i] * std::sin(ang);
      }
    }
    return t;
  }

  std::span<const double> cos_row(int k) const {
    return {wcos.data() + static_cast<size_t>(k) * n, static_cast<size_t>(n)};
  }
  std::span<const double> sin_row(int k) const {
    return {wsin.data() + static_cast<size_t>(k) * n, static_cast<size_t>(n)};
  }
};

// Time-averaged magnitude spectrum; differentiable when A = Var. The tiny
// epsilon keeps the sqrt gradient finite on near-silent frames and is shared
// by both instantiations so they agree bit-for-bit in value.
template <class A>
std::vector<A> avg_power_spectrum_k(std::span<const A> x, const StftConfig& cfg,
                                    const DftTables& t) {
  using std::sqrt;
  const int len = static_cast<int>(x.size());
  if (len < cfg.fft_bins)
    throw std::invalid_argument("power_loss: clip shorter than one STFT window");
  const int frames = (len - cfg.fft_bins) / cfg.hop + 1;
  std::vector<A> acc;
  acc.reserve(t.bins);
  for (int f = 0; f < frames; ++f) {
    std::span<const A> frame(x.data() + static_cast<size_t>(f) * cfg.hop,
                             static_cast<size_t>(cfg.fft_bins));
    for (int k = 0; k < t.bins; ++k) {
      A re = dot(frame, t.cos_row(k));
      A im = dot(frame, t.sin_row(k));
      A mag = sqrt(re * re + im * im + 1e-12);
      if (f == 0)
        acc.push_back(mag);
      else
        acc[k] = acc[k] + mag;
    }
  }
  for (int k = 0; k < t.bins; ++k) acc[k] = acc[k] * (1.0 / frames);
  return acc;
}

Var power_loss_tape(std::span<const Var> x, std::span<const double> target,
                    const StftConfig& cfg, const DftTables& t) {
  if (x.size() != target.size()) throw std::invalid_argument("power_loss: length mismatch");
  std::vector<Var> sx = avg_power_spectrum_k<Var>(x, cfg, t);
  std::vector<double> st = avg_power_spectrum_k<double>(target, cfg, t);
  Var acc = (sx[0] - st[0]) * (sx[0] - st[0]);
  for (int k = 1; k < t.bins; ++k) {
    Var d = sx[k] - st[k];
    acc = acc + d * d;
  }
  return acc * (1.0 / t.bins);
}

struct DrawStats {
  std::vector<double> ce, h;
};

DrawStats run_draws(const FlowStack& student, const Teacher* teacher, const CondFrames& cond,
                    Rng& rng, int mc_samples) {
  DrawStats s;
  s.ce.reserve(mc_samples);
  s.h.reserve(mc_samples);
  for (int i = 0; i < mc_samples; ++i) {
    const std::vector<double> u = draw_noise(rng, student.base(), cond.length);
    const StackResult out = stack_forward(u, cond, student);
    if (teacher) {
      const std::vector<double> ld = teacher->log_density(out.x, cond);
      double ce = 0.0;
      for (double v : ld) ce -= v;
      s.ce.push_back(ce);
    }
    double h = 0.0;
    for (int t = 0; t < cond.length; ++t)
      h += -logistic_log_pdf(u[t], student.base()) + out.log_det[t];
    s.h.push_back(h);
  }
  return s;
}

}  // namespace

McEstimate cross_entropy_mc(const FlowStack& student, const Teacher& teacher,
                            const CondFrames& cond, Rng& rng, int mc_samples) {
  if (mc_samples < 1) throw std::invalid_argument("cross_entropy_mc: mc_samples must be >= 1");
  return summarize(run_draws(student, &teacher, cond, rng, mc_samples).ce);
}

McEstimate entropy_mc(const FlowStack& student, const CondFrames& cond, Rng& rng,
                      int mc_samples) {
  if (mc_samples < 1) throw std::invalid_argument("entropy_mc: mc_samples must be >= 1");
  return summarize(run_draws(student, nullptr, cond, rng, mc_samples).h);
}

double entropy_affine_analytic(std::span<const double> log_alphas) {
  double sum = 0.0;
  for (double la : log_alphas) {
    if (!std::isfinite(la)) throw std::invalid_argument("entropy_affine_analytic: non-finite entry");
    sum += la;
  }
  return sum + 2.0 * static_cast<double>(log_alphas.size());
}

KldEstimate kld_mc(const FlowStack& student, const Teacher& teacher, const CondFrames& cond,
                   Rng& rng, int mc_samples) {
  if (mc_samples < 1) throw std::invalid_argument("kld_mc: mc_samples must be >= 1");
  DrawStats s = run_draws(student, &teacher, cond, rng, mc_samples);
  std::vector<double> kld(s.ce.size());
  for (size_t i = 0; i < kld.size(); ++i) kld[i] = s.ce[i] - s.h[i];
  const McEstimate ce = summarize(s.ce), h = summarize(s.h), k = summarize(kld);
  KldEstimate e;
  e.cross_entropy = ce.mean;
  e.entropy = h.mean;
  e.kld = ce.mean - h.mean;
  e.n_mc_samples = mc_samples;
  e.ce_se = ce.se;
  e.h_se = h.se;
  e.kld_se = k.se;
  return e;
}

double power_loss(std::span<const double> x, std::span<const double> target,
                  const StftConfig& cfg) {
  if (x.size() != target.size()) throw std::invalid_argument("power_loss: length mismatch");
  const DftTables t = DftTables::build(cfg);
  const std::vector<double> sx = avg_power_spectrum_k<double>(x, cfg, t);
  const std::vector<double> st = avg_power_spectrum_k<double>(target, cfg, t);
  double acc = 0.0;
  for (int k = 0; k < t.bins; ++k) acc += (sx[k] - st[k]) * (sx[k] - st[k]);
  return acc / t.bins;
}

StepResult distill_loss(FlowStack& student, const Teacher& teacher,
                        std::span<const DistillItem> batch, const TrainConfig& cfg,
                        const StftConfig& power_cfg, Rng& rng, Tape& tape,
                        std::span<double> grad_out) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("distill_step: empty batch");
  const int D = batch[0].cond.length;
  for (const DistillItem& it : batch) {
    if (it.cond.length != D) throw std::invalid_argument("distill_step: mixed clip lengths");
    if (cfg.power_loss_weight > 0.0 && static_cast<int>(it.target.size()) != D)
      throw std::invalid_argument("distill_step: power loss requires targets of clip length");
  }
  const bool affine_entropy = student.all_affine();
  DftTables tables;
  if (cfg.power_loss_weight > 0.0) tables = DftTables::build(power_cfg);

  tape.reset();
  std::vector<Var> pv = tape.params(student.params().values());
  const Var zero = tape.leaf(0.0);

  Var total{};
  bool have_total = false;
  double ce_sum = 0.0, h_sum = 0.0, power_sum = 0.0;
  const int n_terms = static_cast<int>(batch.size()) * cfg.mc_samples;

  for (const DistillItem& item : batch) {
    for (int draw = 0; draw < cfg.mc_samples; ++draw) {
      const std::vector<double> u = draw_noise(rng, student.base(), D);
      std::vector<Var> uv;
      uv.reserve(u.size());
      for (double v : u) uv.push_back(tape.leaf(v));
      auto out = stack_forward_k<Var, Var>(student, pv.data(), std::span<const Var>(uv),
                                           item.cond, zero);
      std::vector<Var> teacher_ld = teacher.log_density_tape(tape, out.x, item.cond);
      Var ce_seq = -tape.sum(teacher_ld);

      double h_const = 0.0;
      if (affine_entropy) {
        h_const = 2.0 * D;
      } else {
        for (int t = 0; t < D; ++t) h_const -= logistic_log_pdf(u[t], student.base());
      }
      Var h_seq = tape.sum(out.log_det) + h_const;
      Var draw_loss = ce_seq - h_seq;
      ce_sum += ce_seq.v;
      h_sum += h_seq.v;
      if (cfg.power_loss_weight > 0.0) {
        Var pw = power_loss_tape(out.x, item.target, power_cfg, tables);
        draw_loss = draw_loss + cfg.power_loss_weight * pw;
        power_sum += pw.v;
      }
      total = have_total ? total + draw_loss : draw_loss;
      have_total = true;
    }
  }
  total = total / static_cast<double>(n_terms);

  StepResult r;
  r.ce = ce_sum / n_terms;
  r.entropy = h_sum / n_terms;
  r.kld = r.ce - r.entropy;
  r.power = power_sum / n_terms;
  r.total = total.v;
  if (!std::isfinite(total.v)) {
    double max_param = 0.0;
    for (double p : student.params().values()) max_param = std::max(max_param, std::abs(p));
    std::ostringstream oss;
    oss << "distill_step: non-finite loss (ce=" << r.ce << " h=" << r.entropy
        << " power=" << r.power << " max|param|=" << max_param << ")";
    throw NumericalError(oss.str());
  }
  if (!grad_out.empty()) tape.backward(total, grad_out);
  return r;
}

StepResult distill_step(FlowStack& student, const Teacher& teacher,
                        std::span<const DistillItem> batch, const TrainConfig& cfg,
                        const StftConfig& power_cfg, Rng& rng, Adam& opt, Tape& tape) {
  std::vector<double> grad(student.params().values().size());
  StepResult r = distill_loss(student, teacher, batch, cfg, power_cfg, rng, tape, grad);
  r.grad_norm = clip_global_norm(grad, cfg.clip_norm);
  opt.step(student.params().values(), grad);
  return r;
}

std::vector<DistillRecord> distill_run(FlowStack& student, const Teacher& teacher,
                                       std::span<const TrainExample> pool,
                                       const TrainConfig& cfg, const StftConfig& power_cfg,
                                       int start_step,
                                       const std::function<void(const DistillRecord&)>& on_step) {
  cfg.validate();
  if (pool.empty()) throw std::invalid_argument("distill_run: empty clip pool");
  constexpr int kCropAlign = 32;

  Rng rng(cfg.seed);
  Adam opt(student.params().values().size(), {cfg.lr});
  opt.set_steps_taken(start_step);
  Tape tape;
  std::vector<DistillRecord> records;
  records.reserve(std::max(0, cfg.iterations - start_step));

  for (int step = start_step + 1; step <= cfg.iterations; ++step) {
    std::vector<DistillItem> batch;
    batch.reserve(cfg.batch);
    for (int b = 0; b < cfg.batch; ++b) {
      const TrainExample& ex = pool[rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1)];
      if (ex.cond.length < cfg.clip_len)
        throw std::invalid_argument("distill_run: clip shorter than clip_len");
      DistillItem item;
      int offset = 0;
      if (ex.cond.length > cfg.clip_len) {
        const int max_block = (ex.cond.length - cfg.clip_len) / kCropAlign;
        offset = static_cast<int>(rng.uniform_int(0, max_block)) * kCropAlign;
      }
      item.cond = ex.cond.slice(offset, cfg.clip_len);
      if (cfg.power_loss_weight > 0.0) {
        if (static_cast<int>(ex.x.size()) < offset + cfg.clip_len)
          throw std::invalid_argument("distill_run: power loss requires waveform targets");
        item.target.assign(ex.x.begin() + offset, ex.x.begin() + offset + cfg.clip_len);
      }
      batch.push_back(std::move(item));
    }
    DistillRecord rec;
    rec.step = step;
    rec.result = distill_step(student, teacher, batch, cfg, power_cfg, rng, opt, tape);
    if (on_step) on_step(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace molflow

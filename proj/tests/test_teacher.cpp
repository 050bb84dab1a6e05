#include <doctest.h>

#include <cmath>
#include <cstring>

#include "molflow/errors.hpp"
#include "molflow/teacher.hpp"
#include "test_util.hpp"

using namespace molflow;
using test::quad;

namespace {

TeacherConfig tiny_teacher(int n_mixtures = 3) {
  TeacherConfig c;
  c.layers = 2;
  c.channels = 6;
  c.kernel_size = 2;
  c.dilation_cycle = 4;
  c.n_mixtures = n_mixtures;
  return c;
}

void zero_params(Teacher& t) {
  for (double& v : t.params().values()) v = 0.0;
}

}  // namespace

TEST_CASE("zeroed teacher is the standard logistic per step") {
  Teacher t(tiny_teacher(), 2, 1);
  zero_params(t);
  const int D = 16;
  Rng rng(2);
  std::vector<double> x(D);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const auto ld = t.log_density(x, CondFrames::zeros(D, 2));
  for (int i = 0; i < D; ++i)
    CHECK(ld[i] == doctest::Approx(std_logistic_log_pdf(x[i])).epsilon(1e-12));
}

TEST_CASE("teacher density is causal") {
  Teacher t(tiny_teacher(), 2, 3);
  const int D = 24;
  Rng rng(4);
  std::vector<double> x(D);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const CondFrames cond = CondFrames::zeros(D, 2);
  const auto base = t.log_density(x, cond);
  auto x2 = x;
  x2[15] += 0.3;
  const auto moved = t.log_density(x2, cond);
  for (int i = 0; i < 15; ++i) CHECK(moved[i] == base[i]);
  CHECK(moved[15] != base[15]);  // own density changes through the argument
}

TEST_CASE("total log-density factorizes over prefixes") {
  Teacher t(tiny_teacher(2), 2, 5);
  const int D = 3;
  std::vector<double> x{0.2, -0.5, 0.7};
  const CondFrames cond = CondFrames::zeros(D, 2);
  const auto ld = t.log_density(x, cond);
  // chain rule: step t only reads x_{<t}, so junk beyond t changes nothing
  double total = 0.0;
  for (int keep = 0; keep < D; ++keep) {
    auto probe = x;
    for (int j = keep + 1; j < D; ++j) probe[j] = 123.0 + j;
    const auto part = t.log_density(probe, cond);
    CHECK(part[keep] == doctest::Approx(ld[keep]).epsilon(1e-14));
    total += part[keep];
  }
  CHECK(total == doctest::Approx(ld[0] + ld[1] + ld[2]).epsilon(1e-12));
}

TEST_CASE("per-step teacher densities normalize") {
  Teacher t(tiny_teacher(), 2, 7);
  // give the head some life so the mixtures are not the standard logistic
  Rng hr(8);
  const auto& hb = t.params().slice("net.head_b");
  for (int i = 0; i < hb.len; ++i) t.params().values()[hb.offset + i] = hr.uniform(-0.5, 0.5);

  const int D = 6;
  Rng rng(9);
  std::vector<double> x(D);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const CondFrames cond = CondFrames::zeros(D, 2);
  const auto params = t.step_params(x, cond);
  for (int step : {0, 2, 5}) {
    const auto& p = params[step];
    auto pdf = [&](double v) {
      return std::exp(mol_log_pdf_k<double, double>(v, std::span<const double>(p.logw),
                                                    std::span<const double>(p.mu),
                                                    std::span<const double>(p.s)));
    };
    CHECK(quad(pdf, -60.0, 60.0, 1e-8) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("zeroed teacher samples match the clamped standard logistic") {
  Teacher t(tiny_teacher(), 2, 11);
  zero_params(t);
  const int D = 1000;
  const int n_clips = 100;
  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(D) * n_clips);
  Rng rng(12);
  for (int c = 0; c < n_clips; ++c) {
    const auto x = t.sample(rng, CondFrames::zeros(D, 2));
    samples.insert(samples.end(), x.begin(), x.end());
  }
  std::sort(samples.begin(), samples.end());
  // KS distance against the clamped standard-logistic CDF. The clamp puts
  // atoms at the interval ends, so compare the empirical CDF at and just
  // below each unique value against F(x) and its left limit F(x-).
  double ks = 0.0;
  const double n = static_cast<double>(samples.size());
  auto cdf_at = [](double v) { return v < -1.0 ? 0.0 : (v >= 1.0 ? 1.0 : sigmoid(v)); };
  auto cdf_left = [&](double v) {
    if (v <= -1.0) return 0.0;
    return v > 1.0 ? 1.0 : sigmoid(v);
  };
  for (size_t i = 0; i < samples.size();) {
    size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double v = samples[i];
    ks = std::max(ks, std::abs(i / n - cdf_left(v)));      // just below v
    ks = std::max(ks, std::abs(j / n - cdf_at(v)));        // at v (after ties)
    i = j;
  }
  CHECK(ks < 0.02);
  for (double v : samples) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("sampling is deterministic and density-evaluable") {
  Teacher t(tiny_teacher(), 2, 13);
  Rng a(7), b(7);
  const CondFrames cond = CondFrames::zeros(64, 2);
  const auto xa = t.sample(a, cond);
  const auto xb = t.sample(b, cond);
  CHECK(std::memcmp(xa.data(), xb.data(), xa.size() * sizeof(double)) == 0);
  for (double v : t.log_density(xa, cond)) CHECK(std::isfinite(v));
}

TEST_CASE("MLE drives NLL down on constant-zero waveforms") {
  Teacher t(tiny_teacher(), 2, 17);
  std::vector<TrainExample> data;
  for (int i = 0; i < 6; ++i)
    data.push_back({std::vector<double>(128, 0.0), CondFrames::zeros(128, 2)});
  MleConfig cfg;
  cfg.epochs = 12;
  cfg.lr = 5e-3;
  cfg.batch = 2;
  cfg.seed = 3;
  const MleReport rep = teacher_fit_mle(t, data, cfg);
  CHECK(rep.final_val_nll < rep.initial_val_nll);
}

TEST_CASE("MLE on a bimodal source learns two components") {
  Teacher t(tiny_teacher(4), 2, 19);
  Rng rng(20);
  std::vector<TrainExample> data;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> x(96);
    for (double& v : x)
      v = (rng.uniform01() < 0.5 ? -0.5 : 0.5) + rng.uniform(-0.02, 0.02);
    data.push_back({std::move(x), CondFrames::zeros(96, 2)});
  }
  MleConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 1e-2;
  cfg.batch = 4;
  cfg.seed = 21;
  teacher_fit_mle(t, data, cfg);

  // fitted per-step mixture: at least two components carry real weight and
  // the density has two maxima
  const std::vector<double> probe(32, 0.5);
  const auto params = t.step_params(probe, CondFrames::zeros(32, 2));
  const auto& p = params[16];
  int heavy = 0;
  for (double w : p.w)
    if (w > 0.1) ++heavy;
  CHECK(heavy >= 2);
  auto pdf = [&](double v) {
    return std::exp(mol_log_pdf_k<double, double>(v, std::span<const double>(p.logw),
                                                  std::span<const double>(p.mu),
                                                  std::span<const double>(p.s)));
  };
  CHECK(test::count_modes(pdf, -1.2, 1.2, 4001, 1e-4) == 2);
}

TEST_CASE("MLE is reproducible and aborts on divergence") {
  std::vector<TrainExample> data;
  for (int i = 0; i < 4; ++i)
    data.push_back({std::vector<double>(64, 0.1), CondFrames::zeros(64, 2)});

  SUBCASE("same seed, bit-identical NLL trace") {
    auto run = [&]() {
      Teacher t(tiny_teacher(), 2, 23);
      MleConfig cfg;
      cfg.epochs = 4;
      cfg.lr = 2e-3;
      cfg.seed = 5;
      return teacher_fit_mle(t, data, cfg);
    };
    const MleReport r1 = run(), r2 = run();
    REQUIRE(r1.train_nll.size() == r2.train_nll.size());
    CHECK(std::memcmp(r1.train_nll.data(), r2.train_nll.data(),
                      r1.train_nll.size() * sizeof(double)) == 0);
    const double f1 = r1.final_val_nll, f2 = r2.final_val_nll;
    CHECK(std::memcmp(&f1, &f2, sizeof f1) == 0);
  }

  SUBCASE("empty dataset is rejected") {
    Teacher t(tiny_teacher(), 2, 23);
    CHECK_THROWS_AS(teacher_fit_mle(t, {}, MleConfig{}), std::invalid_argument);
  }

  SUBCASE("runaway learning rate aborts with diagnostics") {
    Teacher t(tiny_teacher(), 2, 23);
    MleConfig cfg;
    cfg.epochs = 60;
    cfg.lr = 1e18;
    cfg.clip_norm = 1e18;
    cfg.seed = 6;
    CHECK_THROWS_AS(teacher_fit_mle(t, data, cfg), NumericalError);
  }
}

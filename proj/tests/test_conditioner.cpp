#include <doctest.h>

#include <cmath>
#include <cstring>

#include "molflow/conditioner.hpp"
#include "molflow/tape.hpp"
#include "test_util.hpp"

using namespace molflow;

namespace {

struct Net {
  CondNetSpec spec;
  CondNetLayout layout;
  ParamVector params;
};

Net make_net(int layers, int channels, int out_dim, uint64_t seed, int kernel = 2,
             int cycle = 8) {
  Net n;
  n.spec = {layers, channels, kernel, cycle, 2, out_dim};
  n.layout = register_net(n.params, "net", n.spec);
  Rng rng(seed);
  init_net_params(n.params.values(), n.layout, n.spec, rng);
  // the default head is zero (identity start); give it life so outputs move
  const auto& hw = n.params.slice("net.head_w");
  for (int i = 0; i < hw.len; ++i) n.params.values()[hw.offset + i] = rng.uniform(-0.5, 0.5);
  return n;
}

std::vector<double> forward(const Net& n, std::span<const double> input, const CondFrames& cond) {
  std::vector<double> raw;
  cond_net_forward<double, double>(n.spec, n.layout, n.params.values().data(), input, cond, raw);
  return raw;
}

}  // namespace

TEST_CASE("zeroed weights leave only the head bias") {
  Net n = make_net(3, 8, 5, 0);
  for (double& v : n.params.values()) v = 0.0;
  const auto& hb = n.params.slice("net.head_b");
  for (int o = 0; o < 5; ++o) n.params.values()[hb.offset + o] = 0.25 * (o + 1);

  const int T = 16;
  std::vector<double> input(T, 0.4);
  const auto raw = forward(n, input, CondFrames::zeros(T, 2));
  for (int t = 0; t < T; ++t)
    for (int o = 0; o < 5; ++o)
      CHECK(raw[t * 5 + o] == doctest::Approx(0.25 * (o + 1)).epsilon(1e-15));
}

TEST_CASE("condition sees strictly-past noise only") {
  Net n = make_net(3, 8, 4, 1);
  const int T = 48;
  Rng rng(2);
  std::vector<double> noise(T);
  for (double& v : noise) v = rng.uniform(-1.0, 1.0);
  const CondFrames cond = CondFrames::zeros(T, 2);
  const auto base = condition(n.spec, n.layout, n.params.values(), noise, cond);

  const int k = 20;
  std::vector<double> bumped = noise;
  bumped[k] += 0.5;
  const auto after = condition(n.spec, n.layout, n.params.values(), bumped, cond);
  for (int t = 0; t <= k; ++t)
    for (int o = 0; o < 4; ++o) CHECK(after[t * 4 + o] == base[t * 4 + o]);
  bool changed = false;
  for (int o = 0; o < 4; ++o) changed |= after[(k + 1) * 4 + o] != base[(k + 1) * 4 + o];
  CHECK(changed);
}

TEST_CASE("receptive field matches the dilation structure") {
  // layers=3, kernel=2, cycle=8: dilations 1,2,4 so the stack reaches
  // (2-1)*(1+2+4)=7 steps behind its input, 8 including the current one.
  Net n = make_net(3, 6, 2, 3);
  CHECK(n.spec.receptive_field() == 8);

  const int T = 64;
  const CondFrames cond = CondFrames::zeros(T, 2);
  std::vector<double> input(T, 0.1);
  const auto base = forward(n, input, cond);

  const int probe = 40;
  auto changed_at = [&](int perturb) {
    std::vector<double> in2 = input;
    in2[perturb] += 0.7;
    const auto out = forward(n, in2, cond);
    return out[probe * 2] != base[probe * 2] || out[probe * 2 + 1] != base[probe * 2 + 1];
  };
  // inside the window (current and oldest reachable tap)
  CHECK(changed_at(probe));
  CHECK(changed_at(probe - 7));
  // outside it
  CHECK_FALSE(changed_at(probe - 8));
  CHECK_FALSE(changed_at(probe - 20));
  CHECK_FALSE(changed_at(probe + 1));
}

TEST_CASE("constrain maps raw outputs onto valid transform parameters") {
  SUBCASE("equal logits give uniform weights") {
    std::vector<double> raw(2 + 3 * 4, 0.0);
    raw[0] = 0.3;
    raw[1] = -0.2;
    for (int i = 0; i < 4; ++i) raw[2 + i] = 1.7;  // identical logits
    const TransformParams tp = constrain(raw, TransformKind::non_affine, 4);
    CHECK(tp.log_alpha == doctest::Approx(0.3));
    CHECK(tp.beta == doctest::Approx(-0.2));
    for (int i = 0; i < 4; ++i) CHECK(tp.mol->weights()[i] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("raw scale zero maps to scale one") {
    std::vector<double> raw(2 + 3 * 2, 0.0);
    const TransformParams tp = constrain(raw, TransformKind::non_affine, 2);
    CHECK(tp.mol->scales()[0] == 1.0);
    CHECK(tp.mol->scales()[1] == 1.0);
  }
  SUBCASE("scale floor binds") {
    std::vector<double> raw(2 + 3 * 1, 0.0);
    raw[2 + 2] = -30.0;  // exp(-30) << 1e-4
    const TransformParams tp = constrain(raw, TransformKind::non_affine, 1);
    CHECK(tp.mol->scales()[0] == 1e-4);
  }
  SUBCASE("random raw satisfies the mixture invariants") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> raw(2 + 3 * 6);
      for (double& v : raw) v = rng.uniform(-8.0, 8.0);
      const TransformParams tp = constrain(raw, TransformKind::non_affine, 6);
      double sum = 0.0;
      for (double w : tp.mol->weights()) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      for (double s : tp.mol->scales()) CHECK(s >= 1e-4);
    }
  }
  SUBCASE("affine kind carries no mixture") {
    std::vector<double> raw{0.5, 1.5};
    const TransformParams tp = constrain(raw, TransformKind::affine, 10);
    CHECK_FALSE(tp.mol.has_value());
    CHECK(tp.kind() == TransformKind::affine);
  }
}

TEST_CASE("forward and gradients are deterministic under a fixed seed") {
  auto run = [](std::vector<double>& grad_out) {
    Net n = make_net(2, 6, 3, 99);
    Tape tape;
    auto pv = tape.params(n.params.values());
    const int T = 24;
    Rng rng(4);
    std::vector<Var> input;
    for (int t = 0; t < T; ++t) input.push_back(tape.leaf(rng.uniform(-1.0, 1.0)));
    std::vector<Var> raw;
    cond_net_forward<Var, Var>(n.spec, n.layout, pv.data(), std::span<const Var>(input),
                               CondFrames::zeros(T, 2), raw);
    Var loss = raw[0] * raw[0];
    for (size_t i = 1; i < raw.size(); ++i) loss = loss + raw[i] * raw[i];
    grad_out.assign(pv.size(), 0.0);
    tape.backward(loss, grad_out);
    return loss.v;
  };
  std::vector<double> g1, g2;
  const double l1 = run(g1), l2 = run(g2);
  CHECK(std::memcmp(&l1, &l2, sizeof l1) == 0);
  REQUIRE(g1.size() == g2.size());
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("taped network gradient matches finite differences") {
  Net n = make_net(2, 4, 3, 123);
  const int T = 12;
  Rng noise_rng(8);
  std::vector<double> input(T);
  for (double& v : input) v = noise_rng.uniform(-1.0, 1.0);
  CondFrames cond = CondFrames::zeros(T, 2);
  for (double& v : cond.v) v = noise_rng.uniform(-0.5, 0.5);

  auto loss_at = [&](std::span<const double> params) {
    std::vector<double> raw;
    cond_net_forward<double, double>(n.spec, n.layout, params.data(), input, cond, raw);
    double l = 0.0;
    for (size_t i = 0; i < raw.size(); ++i) l += std::sin(0.7 * i) * raw[i] + 0.05 * raw[i] * raw[i];
    return l;
  };

  Tape tape;
  auto pv = tape.params(n.params.values());
  std::vector<Var> input_v;
  for (double v : input) input_v.push_back(tape.leaf(v));
  std::vector<Var> raw;
  cond_net_forward<Var, Var>(n.spec, n.layout, pv.data(), std::span<const Var>(input_v), cond,
                             raw);
  Var loss = tape.leaf(0.0);
  for (size_t i = 0; i < raw.size(); ++i)
    loss = loss + std::sin(0.7 * i) * raw[i] + 0.05 * raw[i] * raw[i];
  std::vector<double> grad(pv.size());
  tape.backward(loss, grad);

  std::vector<double> base(n.params.values().begin(), n.params.values().end());
  const double h = 1e-5;
  int checked = 0;
  for (size_t k = 0; k < base.size(); k += 7) {  // sample every 7th parameter
    std::vector<double> up = base, dn = base;
    up[k] += h;
    dn[k] -= h;
    const double fd = (loss_at(up) - loss_at(dn)) / (2.0 * h);
    CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked > 20);
}

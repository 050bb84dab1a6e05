#include <benchmark/benchmark.h>

#include "molflow/commands.hpp"
#include "molflow/flow.hpp"

using namespace molflow;

namespace {

void BM_NonaffineForward(benchmark::State& state) {
  TransformParams tp;
  tp.log_alpha = 0.1;
  tp.beta = -0.2;
  std::vector<double> w(10, 0.1), mu(10), s(10, 0.4);
  for (int i = 0; i < 10; ++i) mu[i] = -1.0 + 0.2 * i;
  tp.mol = MoLParams(w, mu, s);
  double u = -4.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nonaffine_forward(u, tp));
    u = u < 4.0 ? u + 1e-3 : -4.0;
  }
}
BENCHMARK(BM_NonaffineForward);

void BM_StackForward(benchmark::State& state) {
  const int D = static_cast<int>(state.range(0));
  StudentConfig cfg;
  cfg.flow_layers = {3, 5};
  cfg.channels = 16;
  cfg.n_mixtures = 10;
  FlowStack stack = make_student(cfg, TransformKind::non_affine, 2, 7);
  Rng rng(8);
  std::vector<double> noise(D);
  for (double& v : noise) v = sample_logistic(rng, stack.base());
  const CondFrames cond = CondFrames::zeros(D, 2);
  for (auto _ : state) benchmark::DoNotOptimize(stack_forward(noise, cond, stack));
  state.SetItemsProcessed(state.iterations() * D);
}
BENCHMARK(BM_StackForward)->Arg(512)->Arg(4096);

}  // namespace

#include <benchmark/benchmark.h>

#include "molflow/commands.hpp"
#include "molflow/distill.hpp"

using namespace molflow;

namespace {

void BM_DistillStep(benchmark::State& state) {
  const int D = static_cast<int>(state.range(0));
  StudentConfig scfg;
  scfg.flow_layers = {2, 2};
  scfg.channels = 8;
  scfg.n_mixtures = 10;
  scfg.dilation_cycle = 4;
  FlowStack student = make_student(scfg, TransformKind::non_affine, 2, 1);
  TeacherConfig tcfg;
  tcfg.layers = 1;
  tcfg.channels = 4;
  tcfg.n_mixtures = 2;
  Teacher teacher(tcfg, 2, 2);

  TrainConfig cfg;
  cfg.lr = 1e-4;
  cfg.batch = 1;
  cfg.clip_len = D;
  cfg.power_loss_weight = 0.0;
  std::vector<DistillItem> batch(1);
  batch[0].cond = CondFrames::zeros(D, 2);

  Rng rng(3);
  Adam opt(student.params().values().size(), {cfg.lr});
  Tape tape;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        distill_step(student, teacher, batch, cfg, {64, 16}, rng, opt, tape));
  state.SetItemsProcessed(state.iterations() * D);
}
BENCHMARK(BM_DistillStep)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TapeBackward(benchmark::State& state) {
  const int D = 256;
  StudentConfig scfg;
  scfg.flow_layers = {2, 2};
  scfg.channels = 8;
  scfg.n_mixtures = 10;
  scfg.dilation_cycle = 4;
  FlowStack student = make_student(scfg, TransformKind::non_affine, 2, 4);
  Tape tape;
  Rng rng(5);
  std::vector<double> noise(D);
  for (double& v : noise) v = sample_logistic(rng, student.base());
  const CondFrames cond = CondFrames::zeros(D, 2);

  std::vector<double> grad(student.params().values().size());
  for (auto _ : state) {
    tape.reset();
    auto pv = tape.params(student.params().values());
    std::vector<Var> uv;
    for (double v : noise) uv.push_back(tape.leaf(v));
    auto out = stack_forward_k<Var, Var>(student, pv.data(), std::span<const Var>(uv), cond,
                                         tape.leaf(0.0));
    tape.backward(tape.sum(out.log_det), grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.counters["edges"] = static_cast<double>(tape.num_edges());
}
BENCHMARK(BM_TapeBackward)->Unit(benchmark::kMillisecond);

}  // namespace

#include <benchmark/benchmark.h>

#include "molflow/mol.hpp"
#include "molflow/rng.hpp"

using namespace molflow;

namespace {

MoLParams bench_mol(int n) {
  std::vector<double> w(n, 1.0 / n), mu(n), s(n);
  Rng rng(1);
  for (int i = 0; i < n; ++i) {
    mu[i] = rng.uniform(-2.0, 2.0);
    s[i] = rng.uniform(0.2, 1.5);
  }
  return MoLParams(w, mu, s);
}

void BM_MolCdf(benchmark::State& state) {
  const MoLParams p = bench_mol(static_cast<int>(state.range(0)));
  double u = -4.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mol_cdf(u, p));
    u = u < 4.0 ? u + 1e-3 : -4.0;
  }
}
BENCHMARK(BM_MolCdf)->Arg(2)->Arg(10);

void BM_MolLogPdf(benchmark::State& state) {
  const MoLParams p = bench_mol(static_cast<int>(state.range(0)));
  double u = -4.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mol_log_pdf(u, p));
    u = u < 4.0 ? u + 1e-3 : -4.0;
  }
}
BENCHMARK(BM_MolLogPdf)->Arg(2)->Arg(10);

void BM_MolQuantile(benchmark::State& state) {
  const MoLParams p = bench_mol(10);
  double q = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mol_quantile(q, p, 1e-10));
    q = q < 0.99 ? q + 1e-3 : 0.01;
  }
}
BENCHMARK(BM_MolQuantile);

}  // namespace

#include <vector>

#include <benchmark/benchmark.h>

#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/dilute.hpp"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/spectral_grid.hpp"
#include "suspvisc/spectral_stokes.hpp"

using namespace suspvisc;

namespace {

void BM_GreenApply(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  SpectralGrid grid(dim, n, 16.0);
  Rng rng(1);
  SymField tau(sym_components(dim), grid.make_real());
  for (auto& c : tau)
    for (auto& v : c) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(green_apply(grid, tau, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.real_size()));
}
BENCHMARK(BM_GreenApply)->Args({2, 256})->Args({3, 32})->Args({3, 64})->Unit(benchmark::kMillisecond);

void BM_SolveCorrector(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  EnsembleSpec spec;
  spec.dim = dim;
  spec.box = dim == 2 ? 32.0 : 16.0;
  spec.volume_fraction = 0.02;
  spec.gap = 0.5;
  spec.seed = 3;
  const ParticleConfig c = generate(spec);
  SolverConfig sc;
  sc.n = n;
  sc.theta = 1e3;
  const Matrix e = strain_basis(dim).elements[0];
  int iterations = 0;
  for (auto _ : state) {
    const CorrectorField f = solve_corrector(c, e, sc);
    iterations = f.iterations;
    benchmark::DoNotOptimize(f.residual);
  }
  state.counters["cg_iterations"] = iterations;
}
BENCHMARK(BM_SolveCorrector)->Args({2, 128})->Args({3, 32})->Unit(benchmark::kMillisecond);

void BM_PairCorrelation(benchmark::State& state) {
  EnsembleSpec spec;
  spec.dim = static_cast<int>(state.range(0));
  spec.box = spec.dim == 2 ? 64.0 : 24.0;
  spec.volume_fraction = 0.1;
  spec.seed = 5;
  std::vector<ParticleConfig> configs;
  for (std::uint64_t s = 0; s < 8; ++s) {
    EnsembleSpec e = spec;
    e.seed = s;
    configs.push_back(generate(e));
  }
  for (auto _ : state) benchmark::DoNotOptimize(pair_correlation(configs));
}
BENCHMARK(BM_PairCorrelation)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_FarKernel(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Matrix e = strain_basis(dim).elements[0];
  Point y = Point::Zero();
  y[0] = 3.0;
  y[1] = 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(far_kernel_tensor(dim, y));
}
BENCHMARK(BM_FarKernel)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_NearKernelReflection(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  Point y = Point::Zero();
  y[0] = 3.0;
  y[1] = 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(near_kernel_reflection_tensor(dim, y));
}
BENCHMARK(BM_NearKernelReflection)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

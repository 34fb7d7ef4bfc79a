// Serial against OpenMP versions of the two parallel kernels. Set
// OMP_NUM_THREADS to control the parallel side.

#include <benchmark/benchmark.h>

#include <cmath>

#include "tpplab/flux.hpp"
#include "tpplab/integrator.hpp"
#include "tpplab/oracle.hpp"

namespace {

using namespace tpp;

const RegionGeometry kInterval(RegionKind::Interval1D, 1, -1.0, 1.0);
const RegionGeometry kPlanar(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);

struct EnsembleSetup {
  CommittorModel model;
  FluxSampler flux;
  TppSimulator sim;
};

const EnsembleSetup& ensemble_setup() {
  static const EnsembleSetup s = [] {
    const PotentialModel pot = make_double_well_1d(1.0, 0.5);
    CommittorModel m = exact_committor_1d(pot, kInterval, 256)->as_model();
    FluxSampler f = FluxSampler::make(kInterval, [m](const Vec& z) { return m.log_boundary_flux(z); });
    TppOptions opt;
    opt.dt = 1e-3;
    TppSimulator sim(m, opt);
    return EnsembleSetup{std::move(m), std::move(f), std::move(sim)};
  }();
  return s;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const auto& s = ensemble_setup();
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_ensemble_serial(s.sim, s.flux, static_cast<int>(state.range(0)), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnsembleParallel(benchmark::State& state) {
  const auto& s = ensemble_setup();
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_ensemble(s.sim, s.flux, static_cast<int>(state.range(0)), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct GridSetup {
  PotentialModel pot;
  std::vector<double> grid;
  int nx, ny;
};

const GridSetup& grid_setup(int n) {
  static GridSetup s{make_double_well_2d(1.0, 1.0, 0.5), {}, 0, 0};
  if (s.nx != n) {
    s.nx = n;
    s.ny = n;
    s.grid.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s.grid[static_cast<std::size_t>(i) * n + j] = static_cast<double>(i) / (n - 1) + 1e-3 * std::sin(i + 2.0 * j);
  }
  return s;
}

template <double (*Kernel)(const PotentialModel&, const std::vector<double>&, int, int, double, double,
                           double, double)>
void BM_Residual(benchmark::State& state) {
  const auto& s = grid_setup(static_cast<int>(state.range(0)));
  const double hx = 2.0 / (s.nx - 1), hy = 8.0 / (s.ny - 1);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(s.pot, s.grid, s.nx, s.ny, -1.0, hx, -4.0, hy));
  state.SetItemsProcessed(state.iterations() * (s.nx - 2) * (s.ny - 2));
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_Residual, fd_residual_serial)->Arg(257)->Arg(1025)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_Residual, fd_residual_parallel)->Arg(257)->Arg(1025)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>

#include "ddlab/evolution.hpp"
#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"
#include "ddlab/stationary.hpp"
#include "ddlab/transport.hpp"

using namespace ddlab;

namespace {

ModelParams bench_params(double eps) {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{4.0, 4.0, 1.0, false};
  PotentialSpec phi{1.0, 1.0, 0.0, 0.0};
  return ModelParams::validated(f, g, c, phi, phi, eps);
}

const StationaryState& bench_state() {
  static const StationaryState st =
      solve_stationary(bench_params(0.02), Grid1D::make(-3.0, 3.0, 512));
  return st;
}

void bm_w2(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid1D grid = Grid1D::make(-3.0, 3.0, n);
  const Density a = density_from_fn(grid, [](double x) {
    return std::exp(-0.5 * (x + 0.5) * (x + 0.5) / 0.09);
  });
  const Density b = density_from_fn(grid, [](double x) {
    return std::exp(-0.5 * (x - 0.5) * (x - 0.5) / 0.25);
  });
  for (auto _ : state) benchmark::DoNotOptimize(w2(a, b));
}

void bm_invert_dh(benchmark::State& state) {
  const ModelParams params = bench_params(0.05);
  double rho = 0.3;
  for (auto _ : state) {
    rho = 0.3 + 0.7 * std::abs(std::sin(rho));
    benchmark::DoNotOptimize(invert_dh(params, rho, 1.1));
  }
}

void bm_stationary(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ModelParams params = bench_params(0.05);
  const Grid1D grid = Grid1D::make(-3.0, 3.0, n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_stationary(params, grid));
}

void bm_jko_step(benchmark::State& state) {
  const StationaryState& st = bench_state();
  const ModelParams params = bench_params(0.02);
  QuantileRep qu = to_quantiles(st.ubar, 256);
  QuantileRep qv = to_quantiles(st.vbar, 256);
  for (double& x : qu.positions) x += 0.2;
  for (double& x : qv.positions) x -= 0.2;
  const DensityPair init{from_quantiles(qu, st.ubar.grid),
                         from_quantiles(qv, st.ubar.grid)};
  JkoConfig cfg;
  cfg.tau = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(jko_step(params, init, cfg));
}

void bm_fv_step(benchmark::State& state) {
  const StationaryState& st = bench_state();
  const ModelParams params = bench_params(0.02);
  DensityPair pair{st.ubar, st.vbar};
  for (auto _ : state) pair = fv_oracle_step(params, pair, 1e-5);
  benchmark::DoNotOptimize(pair);
}

BENCHMARK(bm_w2)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_invert_dh);
BENCHMARK(bm_stationary)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_jko_step)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fv_step);

}  // namespace

BENCHMARK_MAIN();

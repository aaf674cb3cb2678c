//
// Copyright 2026 The heatchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


#include <vector>

#include <benchmark/benchmark.h>

#include "heatchain/fluctuation.hpp"
#include "heatchain/jump_process.hpp"
#include "heatchain/limit_ode.hpp"
#include "heatchain/random.hpp"

namespace {

using namespace heatchain;

ChainConfig Chain(int n, int m) {
  ChainConfig cfg;
  cfg.n_cells = n;
  cfg.particles_per_cell = m;
  cfg.t_left = 1.0;
  cfg.t_right = 2.0;
  cfg.rate_fn = RateFunctionSpec::SqrtProduct();
  return cfg;
}

void BM_StepInPlace(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ChainConfig cfg = Chain(n, 1000);
  std::vector<double> e(static_cast<std::size_t>(n), 1.5);
  std::vector<double> rates(static_cast<std::size_t>(n + 1));
  UniformStream stream(1);
  int clock = 0;
  double flux = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(StepInPlace(std::span<double>(e), cfg, rates, stream, clock, flux));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepInPlace)->Arg(3)->Arg(10)->Arg(50);

void BM_Simulate(benchmark::State& state) {
  const ChainConfig cfg = Chain(static_cast<int>(state.range(0)), 1000);
  const EnergyState e0 = EnergyState::Uniform(cfg.n_cells, 1.0);
  SimulateOptions opts;
  opts.record_events = false;
  opts.grid = {0.0, 1.0};
  std::uint64_t seed = 0;
  std::size_t events = 0;
  for (auto _ : state) {
    Trajectory t = Simulate(cfg, e0, 1.0, ++seed, opts);
    events += t.event_count();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_Simulate)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SolveEquilibrium(benchmark::State& state) {
  const ChainConfig cfg = Chain(static_cast<int>(state.range(0)), 100);
  for (auto _ : state) benchmark::DoNotOptimize(SolveEquilibrium(cfg, 1e-12).c_star);
}
BENCHMARK(BM_SolveEquilibrium)->Arg(3)->Arg(10)->Arg(50);

void BM_IntegrateOde(benchmark::State& state) {
  const ChainConfig cfg = Chain(static_cast<int>(state.range(0)), 100);
  const EnergyState e0 = EnergyState::Uniform(cfg.n_cells, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(IntegrateOde(cfg, e0, 5.0, 1e-3).states.back());
}
BENCHMARK(BM_IntegrateOde)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LyapunovSolve(benchmark::State& state) {
  const ChainConfig cfg = Chain(static_cast<int>(state.range(0)), 100);
  const EquilibriumProfile eq = SolveEquilibrium(cfg, 1e-12);
  const Eigen::MatrixXd jac = AnalyticJacobian(eq.e_star.values(), cfg);
  const Eigen::MatrixXd h = HMatrix(eq.e_star, cfg);
  const Eigen::MatrixXd q = h * h.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(LyapunovSolve(jac, q).residual);
}
BENCHMARK(BM_LyapunovSolve)->Arg(3)->Arg(10)->Arg(20);

void BM_MesoscopicPath(benchmark::State& state) {
  const ChainConfig cfg = Chain(3, 1000);
  const MesoscopicSde sde(cfg, 2.0, 2.5e-4);
  const EnergyState z0 = EnergyState::Uniform(3, 1.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sde.RunFinal(z0, ++seed).state);
}
BENCHMARK(BM_MesoscopicPath)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

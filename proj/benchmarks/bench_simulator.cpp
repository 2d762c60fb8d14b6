#include <benchmark/benchmark.h>

#include "tmsim/simulator.hpp"

using namespace tmsim;

static void BM_Step(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(static_cast<int>(state.range(0)));
  const FemOperators ops = FemOperators::assemble(mesh);
  const Parameters p = Parameters::baseline();
  RunConfig cfg;
  cfg.ic = RandomIC{0.0, 0.02};
  Stepper stepper(mesh, ops, p, cfg.dt);
  State s = initial_state(mesh, cfg, p);
  // Move past the initial transient so the timing reflects a typical step.
  for (int k = 0; k < 500; ++k) s = stepper.step(s);
  for (auto _ : state) {
    s = stepper.step(s);
    state.counters["iterations"] = stepper.last_stats().iterations;
  }
}
BENCHMARK(BM_Step)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_RunOneTimeUnit(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(3);
  const FemOperators ops = FemOperators::assemble(mesh);
  Parameters p = Parameters::baseline();
  p.gamma = 20.0;
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.stop_when_stationary = false;
  for (auto _ : state) benchmark::DoNotOptimize(run(mesh, ops, p, cfg));
}
BENCHMARK(BM_RunOneTimeUnit)->Unit(benchmark::kMillisecond);

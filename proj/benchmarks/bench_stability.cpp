#include <benchmark/benchmark.h>

#include "tmsim/stability.hpp"

using namespace tmsim;

static void BM_SteadyState(benchmark::State& state) {
  const Parameters p = Parameters::baseline();
  for (auto _ : state) benchmark::DoNotOptimize(find_steady_state(p));
}
BENCHMARK(BM_SteadyState)->Unit(benchmark::kMicrosecond);

static void BM_Analyze(benchmark::State& state) {
  const Parameters p = Parameters::baseline();
  for (auto _ : state) benchmark::DoNotOptimize(analyze(p));
}
BENCHMARK(BM_Analyze)->Unit(benchmark::kMicrosecond);

static void BM_NoTuringScan(benchmark::State& state) {
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(no_turing_scan(samples, 1));
}
BENCHMARK(BM_NoTuringScan)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

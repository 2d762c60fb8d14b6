#include <benchmark/benchmark.h>

#include "tmsim/fem.hpp"
#include "tmsim/mesh.hpp"

using namespace tmsim;

static void BM_Icosphere(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(icosphere(level));
}
BENCHMARK(BM_Icosphere)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(FemOperators::assemble(mesh));
  state.counters["vertices"] = static_cast<double>(mesh.num_vertices());
}
BENCHMARK(BM_Assemble)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_WeightedMass(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(4);
  const MeshPattern pattern(mesh);
  std::vector<double> weights(mesh.num_vertices(), 1.5);
  std::vector<double> values(pattern.nonzeros());
  for (auto _ : state) {
    fill_weighted_mass(mesh, pattern, weights, values);
    benchmark::DoNotOptimize(values.data());
  }
}
BENCHMARK(BM_WeightedMass)->Unit(benchmark::kMicrosecond);

// Shifted Laplace-Beltrami solve (M + A) x = M 1 with each preconditioner.
static void BM_BiCGStab(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(4);
  const FemOperators ops = FemOperators::assemble(mesh);
  const SparseMatrix system = (1000.0 * ops.mass + ops.stiffness).eval();
  const Vector rhs = ops.mass * Vector::LinSpaced(system.rows(), 0.0, 1.0);
  const auto kind = static_cast<PreconditionerKind>(state.range(0));
  for (auto _ : state) {
    Vector x = Vector::Zero(system.rows());
    SolveStats stats;
    switch (kind) {
      case PreconditionerKind::none:
        stats = bicgstab(system, rhs, x, IdentityPreconditioner{}, 1e-10, 10000);
        break;
      case PreconditionerKind::jacobi:
        stats = bicgstab(system, rhs, x, JacobiPreconditioner(system), 1e-10, 10000);
        break;
      case PreconditionerKind::ilu0: {
        Ilu0Preconditioner ilu;
        ilu.compute(system);
        stats = bicgstab(system, rhs, x, ilu, 1e-10, 10000);
        break;
      }
    }
    state.counters["iterations"] = stats.iterations;
  }
}
BENCHMARK(BM_BiCGStab)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_Eigenpairs(benchmark::State& state) {
  const SurfaceMesh mesh = icosphere(4);
  const FemOperators ops = FemOperators::assemble(mesh);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(laplace_beltrami_eigs(ops.mass, ops.stiffness, k));
}
BENCHMARK(BM_Eigenpairs)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->Iterations(3);

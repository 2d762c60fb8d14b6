#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tmsim/fem.hpp"
#include "tmsim/kinetics.hpp"
#include "tmsim/mesh.hpp"

namespace tmsim {

struct State {
  Vector u;
  Vector v;
  double V = 0.0;
  double t = 0.0;
  long step = 0;
};

/// Independent uniform draws per vertex for u and v.
struct RandomIC {
  double lo = 0.0;
  double hi = 0.02;
};

struct ConstantIC {
  double u0 = 0.0;
  double v0 = 0.0;
};

/// Homogeneous steady state of the mesh-consistent parameters plus uniform
/// noise in [-amplitude, amplitude] on both species.
struct SteadyStateNoiseIC {
  double amplitude = 1e-3;
};

using InitialCondition = std::variant<RandomIC, ConstantIC, SteadyStateNoiseIC>;

struct RunConfig {
  double dt = 1e-3;
  double t_end = 25.0;
  double linear_tol = 1e-10;
  double stationarity_tol = 1e-6;
  double snapshot_interval = 1.0;
  std::uint64_t seed = 1;
  InitialCondition ic = RandomIC{};
  PreconditionerKind preconditioner = PreconditionerKind::ilu0;
  bool stop_when_stationary = true;

  void validate() const;
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { non_finite, negativity, solver };

  SimulationError(Kind kind, const std::string& what, long step, double residual = 0.0)
      : std::runtime_error(what), kind_(kind), step_(step), residual_(residual) {}

  Kind kind() const noexcept { return kind_; }
  long step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  Kind kind_;
  long step_;
  double residual_;
};

/// Parameters with c = 1/|B_h| and area = |Gamma_h| taken from the mesh, so
/// that homogeneous states of the analysis are fixed points of the scheme.
Parameters mesh_parameters(const Parameters& p, const SurfaceMesh& mesh);

State initial_state(const SurfaceMesh& mesh, const RunConfig& cfg, const Parameters& p);

/// Semi-implicit stepper. The block matrix layout is built once; each call
/// rewrites values and solves starting from a linear extrapolation of the
/// last two states. The ILU(0) factorization is refreshed when the previous
/// solve needed more than a few iterations or after a fixed number of steps.
class Stepper {
 public:
  Stepper(const SurfaceMesh& mesh, const FemOperators& ops, const Parameters& p, double dt,
          double linear_tol = 1e-10,
          PreconditionerKind preconditioner = PreconditionerKind::ilu0);

  State step(const State& state);

  const SolveStats& last_stats() const { return stats_; }
  /// Interleaved (u_0, v_0, u_1, v_1, ...) system of the last step.
  const SparseMatrix& system_matrix() const { return system_; }
  /// 1 / |B_h|
  double pool_coefficient() const { return pool_coefficient_; }
  double dt() const { return dt_; }

 private:
  void assemble(const State& state);
  void correct_constant_modes();

  const SurfaceMesh& mesh_;
  const FemOperators& ops_;
  Parameters p_;
  double dt_;
  double linear_tol_;
  PreconditionerKind preconditioner_kind_;
  double pool_coefficient_;
  MeshPattern pattern_;
  std::size_t n_;
  std::size_t nnz_;
  SparseMatrix system_;
  std::vector<int> top_slot_;
  std::vector<double> w_fu_, w_fv_, w_qu_, w_qv_;
  Vector rhs_;
  Vector guess_;
  State last_input_;
  Ilu0Preconditioner ilu_;
  bool ilu_ready_ = false;
  int steps_since_refactor_ = 0;
  SolveStats stats_;
};

/// One step without reusing a Stepper.
State step(const State& state, const SurfaceMesh& mesh, const FemOperators& ops,
           const Parameters& p, double dt);

struct SeriesRow {
  double t = 0.0;
  long step = 0;
  double int_u = 0.0;
  double int_v = 0.0;
  double V = 0.0;
  /// integral of u + v at the previous step, which determined V
  double prev_integral = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double min_v = 0.0;
  double max_v = 0.0;
  double residual = 0.0;  ///< (|du|_inf + |dv|_inf) / dt; 0 on the first row
  double heterogeneity = 0.0;
  int linear_iterations = 0;
};

struct TimeSeries {
  std::vector<SeriesRow> rows;
  double pool_coefficient = 0.0;  ///< 1 / |B_h|
  double V0 = 0.0;
};

using SnapshotCallback = std::function<void(const State&)>;

struct RunResult {
  State final_state;
  TimeSeries series;
  bool converged = false;  ///< stopped early on the stationarity criterion
  bool failed = false;
  std::string failure;
  std::vector<std::string> warnings;
};

/// Fixed-dt loop to t_end. Failures are reported in the result; the series
/// and final state hold everything computed before the failure.
RunResult run(const SurfaceMesh& mesh, const FemOperators& ops, const Parameters& p,
              const RunConfig& cfg, const SnapshotCallback& on_snapshot = {});

/// Continues from a given state instead of building the initial condition.
RunResult run_from(const State& start, const SurfaceMesh& mesh, const FemOperators& ops,
                   const Parameters& p, const RunConfig& cfg,
                   const SnapshotCallback& on_snapshot = {});

/// Max over rows after the first of |V |B_h| + prev_integral - V0 |B_h|| /
/// (V0 |B_h|).
double conservation_check(const TimeSeries& series);

/// Same semi-implicit linearization for the homogeneous system on one cell,
/// with V = V0 - c|Gamma| (u + v).
struct OdeState {
  double u = 0.0;
  double v = 0.0;
};
OdeState ode_step(const OdeState& s, const Parameters& p, double dt);

}  // namespace tmsim

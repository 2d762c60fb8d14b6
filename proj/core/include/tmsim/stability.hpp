#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "tmsim/kinetics.hpp"

namespace tmsim {

using Matrix2 = Eigen::Matrix2d;

class SteadyStateError : public std::runtime_error {
 public:
  enum class Kind { precondition, bracket, no_root };

  SteadyStateError(Kind kind, const std::string& what, double left = 0.0, double right = 0.0)
      : std::runtime_error(what), kind_(kind), left_(left), right_(right) {}

  Kind kind() const noexcept { return kind_; }
  /// Function values at the ends of the failed bracket, when applicable.
  double left_value() const noexcept { return left_; }
  double right_value() const noexcept { return right_; }

 private:
  Kind kind_;
  double left_;
  double right_;
};

/// Spatially homogeneous equilibrium together with the Jacobians of
/// (f, g0) (homogeneous perturbations) and (f, g1) (mean-free perturbations,
/// pool frozen at V*).
struct SteadyState {
  double u_star = 0.0;
  double v_star = 0.0;
  double V_star = 0.0;
  double u0_bracket = 0.0;
  double u1_bracket = 0.0;
  int sign_changes = 0;  ///< sign changes of phi seen on the bracket scan
  Matrix2 J0 = Matrix2::Zero();
  Matrix2 J1 = Matrix2::Zero();
};

/// Nullcline of f: the v with f(u, v) = 0.
double v_of_u(double u, const Parameters& p);

/// Positive critical point of v_of_u. Requires a2 > a5 and
/// 2 a1 a2 < a3 (a2 - a5); zero when a1 = 0.
double u0(const Parameters& p);

/// Homogeneous balance of the flux along the f-nullcline.
double phi(double u, const Parameters& p);

SteadyState find_steady_state(const Parameters& p);

/// All sign changes of phi along {u > 0 : u + v[u] < min(1, m)} found on a
/// geometric grid, each refined by bisection. Needs no structural
/// preconditions; used by the randomized scan.
std::vector<SteadyState> find_homogeneous_states(const Parameters& p, int samples = 400);

/// Jacobians for a given homogeneous state (u, v).
Matrix2 jacobian_homogeneous(double u, double v, const Parameters& p);
Matrix2 jacobian_frozen_pool(double u, double v, double Vstar, const Parameters& p);

enum class ConditionStatus { satisfied, equality, violated };

/// One strict inequality `lhs relation rhs` with both sides exposed.
struct ConditionRecord {
  std::string id;
  std::string relation;  ///< "<" or ">"
  double lhs = 0.0;
  double rhs = 0.0;
  ConditionStatus status = ConditionStatus::violated;

  bool satisfied() const { return status == ConditionStatus::satisfied; }
};

/// cdt:1 ... cdt:8, cdt:d1, cdt:d2 in that order.
std::vector<ConditionRecord> check_conditions(const Parameters& p);

const ConditionRecord& find_condition(const std::vector<ConditionRecord>& records,
                                      const std::string& id);

/// max of the cdt:d1 / cdt:d2 thresholds: a d beyond which instability is
/// guaranteed once the remaining conditions hold.
double sufficient_d(const std::vector<ConditionRecord>& records);

struct HomogeneousStability {
  double trace = 0.0;
  double det = 0.0;
  bool tu1 = false;  ///< trace < 0
  bool tu2 = false;  ///< det > 0

  bool stable() const { return tu1 && tu2; }
};

HomogeneousStability homogeneous_stability(const Matrix2& J0);

struct TuringBand {
  double tu3_value = 0.0;  ///< d J11 + J22
  double tu4_value = 0.0;  ///< tu3^2 - 4 d det J
  bool tu3 = false;
  bool tu4 = false;
  /// Roots of d mu^2 - gamma tu3 mu + gamma^2 det = 0 (present iff tu3 && tu4).
  std::optional<double> mu_minus;
  std::optional<double> mu_plus;

  bool has_band() const { return mu_minus.has_value(); }
  bool contains(double lambda) const {
    return has_band() && *mu_minus < lambda && lambda < *mu_plus;
  }
};

TuringBand turing_conditions(const Matrix2& J1, double d, double gamma = 1.0);

/// Eigenvalues of -lambda diag(1, d) + gamma J1, larger real part first.
std::array<std::complex<double>, 2> growth_rates(double lambda, const Matrix2& J1, double d,
                                                 double gamma);
double max_growth_rate(double lambda, const Matrix2& J1, double d, double gamma);

struct UnstableMode {
  int index;
  double lambda;
  double growth_rate;
};

/// Eigenvalues strictly inside the band. Index 0 (the constant mode) is
/// skipped; eigenvalues must be ascending.
std::vector<UnstableMode> unstable_modes(const Parameters& p, const SteadyState& ss, double d,
                                         std::span<const double> eigenvalues);

/// Smallest d in [d_lo, d_hi] (to within tol) where tu3 and tu4 both hold.
double critical_d(const SteadyState& ss, double d_lo, double d_hi, double tol = 1e-8);

/// Estimates on (u*, v*) valid under cdt:1, cdt:2, cdt:6, cdt:7.
struct SteadyStateBounds {
  bool applicable = false;
  double v_upper = 0.0;
  double u_lower = 0.0;
  double v_lower = 0.0;
  bool v_upper_holds = false;
  bool u_lower_holds = false;
  bool v_lower_holds = false;
};

SteadyStateBounds steady_state_bounds(const Parameters& p, const SteadyState& ss);

enum class Classification { ode_unstable, stable_homogeneous, turing_unstable };

std::string to_string(Classification c);
std::string to_string(ConditionStatus s);

struct TuringReport {
  Parameters parameters;
  SteadyState steady_state;
  std::vector<ConditionRecord> conditions;
  double sufficient_d = 0.0;
  HomogeneousStability homogeneous;
  TuringBand band;  ///< mu values scaled by gamma
  std::optional<double> d_critical;
  std::string d_critical_note;
  SteadyStateBounds bounds;
  Classification classification = Classification::stable_homogeneous;
};

/// Steady state, every condition, stability flags, band and d_c. Throws
/// SteadyStateError when no interior steady state can be located.
TuringReport analyze(const Parameters& p);

struct NoTuringScanOptions {
  int trials = 1000;          ///< kept (filtered) samples to collect
  std::uint64_t seed = 1;
  long max_draws = 2'000'000;
  double d = 1.0;
  double margin_d = 1.0 + 1e-9;
};

struct NoTuringSample {
  Parameters parameters;
  SteadyState state;
  TuringBand band;
};

struct NoTuringScanReport {
  long draws = 0;
  long without_steady_state = 0;
  long not_activator_substrate = 0;
  long ode_unstable = 0;
  long kept = 0;
  std::vector<NoTuringSample> counterexamples;
  long margin_violations = 0;  ///< at margin_d; informational only
};

/// Samples log-uniform parameter sets and checks that no ODE-stable
/// activator-substrate state satisfies both heterogeneous instability
/// conditions at equal diffusion.
NoTuringScanReport no_turing_scan(const NoTuringScanOptions& options);
NoTuringScanReport no_turing_scan(int trials, std::uint64_t seed);

}  // namespace tmsim

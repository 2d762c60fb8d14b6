#include "tmsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tmsim/analysis.hpp"
#include "tmsim/stability.hpp"

namespace tmsim {

namespace {

constexpr double kNegativityWarn = -1e-8;
constexpr double kNegativityAbort = -1e-3;
constexpr std::size_t kMaxWarnings = 20;
constexpr int kRefactorIterations = 3;
constexpr int kRefactorInterval = 200;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::mt19937_64 make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(t_end) && t_end > 0.0, "t_end must be positive");
  require(dt < t_end, "dt must be smaller than t_end");
  require(linear_tol > 0.0, "linear_tol must be positive");
  require(stationarity_tol > 0.0, "stationarity_tol must be positive");
  require(snapshot_interval > 0.0, "snapshot_interval must be positive");
  if (const auto* r = std::get_if<RandomIC>(&ic)) {
    require(r->lo <= r->hi, "random initial condition needs lo <= hi");
  }
  if (const auto* s = std::get_if<SteadyStateNoiseIC>(&ic)) {
    require(s->amplitude >= 0.0, "noise amplitude must be nonnegative");
  }
}

Parameters mesh_parameters(const Parameters& p, const SurfaceMesh& mesh) {
  Parameters q = p;
  q.c = 1.0 / enclosed_volume(mesh);
  q.area = surface_area(mesh);
  return q;
}

State initial_state(const SurfaceMesh& mesh, const RunConfig& cfg, const Parameters& p) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  State s;
  s.u.resize(n);
  s.v.resize(n);
  auto rng = make_rng(cfg.seed);
  std::visit(overloaded{
                 [&](const RandomIC& ic) {
                   std::uniform_real_distribution<double> dist(ic.lo, ic.hi);
                   for (Eigen::Index i = 0; i < n; ++i) {
                     s.u[i] = dist(rng);
                     s.v[i] = dist(rng);
                   }
                 },
                 [&](const ConstantIC& ic) {
                   s.u.setConstant(ic.u0);
                   s.v.setConstant(ic.v0);
                 },
                 [&](const SteadyStateNoiseIC& ic) {
                   const auto ss = find_steady_state(mesh_parameters(p, mesh));
                   std::uniform_real_distribution<double> dist(-ic.amplitude, ic.amplitude);
                   for (Eigen::Index i = 0; i < n; ++i) {
                     s.u[i] = ss.u_star + dist(rng);
                     s.v[i] = ss.v_star + dist(rng);
                   }
                 },
             },
             cfg.ic);
  const SparseMatrix mass = assemble_mass(mesh);
  s.V = p.V0 - integrate(mass, s.u + s.v) / enclosed_volume(mesh);
  return s;
}

Stepper::Stepper(const SurfaceMesh& mesh, const FemOperators& ops, const Parameters& p, double dt,
                 double linear_tol, PreconditionerKind preconditioner)
    : mesh_(mesh),
      ops_(ops),
      p_(p),
      dt_(dt),
      linear_tol_(linear_tol),
      preconditioner_kind_(preconditioner),
      pool_coefficient_(1.0 / enclosed_volume(mesh)),
      pattern_(mesh),
      n_(mesh.num_vertices()),
      nnz_(pattern_.nonzeros()) {
  p_.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (static_cast<std::size_t>(ops.mass.nonZeros()) != nnz_ ||
      static_cast<std::size_t>(ops.stiffness.nonZeros()) != nnz_) {
    throw FemError("operators do not share the mesh pattern");
  }

  const int* outer = ops.mass.outerIndexPtr();
  const int* inner = ops.mass.innerIndexPtr();
  const auto n = static_cast<int>(n_);
  // Unknowns are interleaved per vertex, (u_0, v_0, u_1, v_1, ...), so that
  // ILU(0) sees the local u-v coupling as dense 2x2 blocks.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(4 * nnz_);
  for (int i = 0; i < n; ++i) {
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      const int j = inner[k];
      entries.emplace_back(2 * i, 2 * j, 0.0);
      entries.emplace_back(2 * i, 2 * j + 1, 0.0);
      entries.emplace_back(2 * i + 1, 2 * j, 0.0);
      entries.emplace_back(2 * i + 1, 2 * j + 1, 0.0);
    }
  }
  system_.resize(2 * n, 2 * n);
  system_.setFromTriplets(entries.begin(), entries.end());
  system_.makeCompressed();
  if (static_cast<std::size_t>(system_.nonZeros()) != 4 * nnz_) {
    throw FemError("block pattern has unexpected size");
  }

  // Value index of the (u, u) entry of every pattern entry; (u, v) follows
  // directly and the v row starts 2 * len entries later.
  top_slot_.resize(nnz_);
  for (int i = 0; i < n; ++i) {
    for (int k = outer[i]; k < outer[i + 1]; ++k) top_slot_[k] = 4 * outer[i] + 2 * (k - outer[i]);
  }

  w_fu_.resize(nnz_);
  w_fv_.resize(nnz_);
  w_qu_.resize(nnz_);
  w_qv_.resize(nnz_);
  rhs_.resize(2 * n);
  last_input_.step = -2;
}

void Stepper::assemble(const State& s) {
  const auto n = static_cast<Eigen::Index>(n_);
  const double g = p_.gamma;
  std::vector<double> fu(n_), fv(n_), bu(n_), bv(n_);
  Vector fe(n), qe(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = s.u[i];
    const double v = s.v[i];
    const double w = u + v;
    const auto df = jac_f(u, v, p_);
    const auto dq = jac_q(w, v, s.V, p_);
    fu[i] = g * df.du;
    fv[i] = g * df.dv;
    bu[i] = g * (df.du - dq.du);
    bv[i] = g * (df.dv - dq.dv);
    fe[i] = g * (f(u, v, p_) - df.du * u - df.dv * v);
    qe[i] = g * (q(w, v, s.V, p_) - dq.du * u - dq.dv * v);
  }
  fill_weighted_mass(mesh_, pattern_, fu, w_fu_);
  fill_weighted_mass(mesh_, pattern_, fv, w_fv_);
  fill_weighted_mass(mesh_, pattern_, bu, w_qu_);
  fill_weighted_mass(mesh_, pattern_, bv, w_qv_);

  const double* m = ops_.mass.valuePtr();
  const double* a = ops_.stiffness.valuePtr();
  const int* outer = ops_.mass.outerIndexPtr();
  double* values = system_.valuePtr();
  const double inv_dt = 1.0 / dt_;
  const double d = p_.d;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int len = outer[i + 1] - outer[i];
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      const int slot = top_slot_[k];
      values[slot] = inv_dt * m[k] + a[k] - w_fu_[k];
      values[slot + 1] = -w_fv_[k];
      values[slot + 2 * len] = w_qu_[k];
      values[slot + 2 * len + 1] = inv_dt * m[k] + d * a[k] + w_qv_[k];
    }
  }

  const Vector top = ops_.mass * (inv_dt * s.u + fe);
  const Vector bottom = ops_.mass * (inv_dt * s.v - fe + qe);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs_[2 * i] = top[i];
    rhs_[2 * i + 1] = bottom[i];
  }
}

State Stepper::step(const State& s) {
  const auto n = static_cast<Eigen::Index>(n_);
  if (s.u.size() != n || s.v.size() != n) {
    throw std::invalid_argument("state size does not match the mesh");
  }
  assemble(s);

  // Linear extrapolation from the previous step when it is available.
  const bool extrapolate = last_input_.u.size() == n && last_input_.step + 1 == s.step;
  if (guess_.size() != 2 * n) guess_.resize(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    guess_[2 * i] = extrapolate ? 2.0 * s.u[i] - last_input_.u[i] : s.u[i];
    guess_[2 * i + 1] = extrapolate ? 2.0 * s.v[i] - last_input_.v[i] : s.v[i];
  }

  const int max_iter = static_cast<int>(20 * n);
  try {
    switch (preconditioner_kind_) {
      case PreconditionerKind::ilu0: {
        // The factorization is reused while it keeps the iteration count low.
        const bool refactor = !ilu_ready_ || stats_.iterations > kRefactorIterations ||
                              steps_since_refactor_ >= kRefactorInterval;
        if (refactor) {
          ilu_.compute(system_);
          ilu_ready_ = true;
          steps_since_refactor_ = 0;
        }
        ++steps_since_refactor_;
        const Vector start = guess_;
        try {
          stats_ = bicgstab(system_, rhs_, guess_, ilu_, linear_tol_, max_iter);
        } catch (const SolverError&) {
          if (refactor) throw;
          // A stale factorization can stall the iteration; retry with a fresh one.
          ilu_.compute(system_);
          steps_since_refactor_ = 1;
          guess_ = start;
          stats_ = bicgstab(system_, rhs_, guess_, ilu_, linear_tol_, max_iter);
        }
        break;
      }
      case PreconditionerKind::jacobi: {
        const JacobiPreconditioner jacobi(system_);
        stats_ = bicgstab(system_, rhs_, guess_, jacobi, linear_tol_, max_iter);
        break;
      }
      case PreconditionerKind::none:
        stats_ = bicgstab(system_, rhs_, guess_, IdentityPreconditioner{}, linear_tol_, max_iter);
        break;
    }
  } catch (const SolverError& e) {
    throw SimulationError(SimulationError::Kind::solver,
                          "linear solve failed at step " + std::to_string(s.step + 1) + ": " +
                              e.what(),
                          s.step + 1, e.residual());
  }

  correct_constant_modes();

  State next;
  next.u.resize(n);
  next.v.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    next.u[i] = guess_[2 * i];
    next.v[i] = guess_[2 * i + 1];
  }
  next.V = p_.V0 - pool_coefficient_ * integrate(ops_.mass, s.u + s.v);
  next.t = s.t + dt_;
  next.step = s.step + 1;
  last_input_.u = s.u;
  last_input_.v = s.v;
  last_input_.step = s.step;
  if (!all_finite(next.u) || !all_finite(next.v) || !std::isfinite(next.V)) {
    throw SimulationError(SimulationError::Kind::non_finite,
                          "non-finite values at step " + std::to_string(next.step) +
                              " (t = " + std::to_string(next.t) + ")",
                          next.step, stats_.residual);
  }
  return next;
}

// Galerkin correction on the coarse space spanned by the constant u field and
// the constant v field. The coarse residual is formed from the mass and
// weighted-mass row sums only: constants are in the kernel of the stiffness
// matrix, and leaving it out avoids the rounding of the large d A entries.
// Afterwards the integrals the scheme conserves are kept to rounding.
void Stepper::correct_constant_modes() {
  const double* m = ops_.mass.valuePtr();
  const int* outer = ops_.mass.outerIndexPtr();
  const double inv_dt = 1.0 / dt_;
  double k[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double kx[2] = {0.0, 0.0};
  double b[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n_; ++i) {
    double row_m = 0.0, row_fu = 0.0, row_fv = 0.0, row_qu = 0.0, row_qv = 0.0;
    for (int e = outer[i]; e < outer[i + 1]; ++e) {
      row_m += m[e];
      row_fu += w_fu_[e];
      row_fv += w_fv_[e];
      row_qu += w_qu_[e];
      row_qv += w_qv_[e];
    }
    const double uu = inv_dt * row_m - row_fu, uv = -row_fv;
    const double vu = row_qu, vv = inv_dt * row_m + row_qv;
    const double u = guess_[2 * i], v = guess_[2 * i + 1];
    k[0][0] += uu;
    k[0][1] += uv;
    k[1][0] += vu;
    k[1][1] += vv;
    kx[0] += uu * u + uv * v;
    kx[1] += vu * u + vv * v;
    b[0] += rhs_[2 * i];
    b[1] += rhs_[2 * i + 1];
  }
  const double r[2] = {b[0] - kx[0], b[1] - kx[1]};
  const double det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
  if (!std::isfinite(det) || !(std::abs(det) > 0.0)) return;
  const double alpha_u = (r[0] * k[1][1] - k[0][1] * r[1]) / det;
  const double alpha_v = (k[0][0] * r[1] - k[1][0] * r[0]) / det;
  for (Eigen::Index i = 0; i < guess_.size(); i += 2) {
    guess_[i] += alpha_u;
    guess_[i + 1] += alpha_v;
  }
}

State step(const State& state, const SurfaceMesh& mesh, const FemOperators& ops,
           const Parameters& p, double dt) {
  Stepper stepper(mesh, ops, p, dt);
  return stepper.step(state);
}

namespace {

SeriesRow make_row(const State& s, const SparseMatrix& mass, double prev_integral,
                   double residual, int iterations) {
  SeriesRow r;
  r.t = s.t;
  r.step = s.step;
  r.int_u = integrate(mass, s.u);
  r.int_v = integrate(mass, s.v);
  r.V = s.V;
  r.prev_integral = prev_integral;
  r.min_u = s.u.minCoeff();
  r.max_u = s.u.maxCoeff();
  r.min_v = s.v.minCoeff();
  r.max_v = s.v.maxCoeff();
  r.residual = residual;
  r.heterogeneity = heterogeneity(s.u, mass);
  r.linear_iterations = iterations;
  return r;
}

std::string negativity_message(const State& s, const char* name, const Vector& x) {
  Eigen::Index where = 0;
  const double value = x.minCoeff(&where);
  std::ostringstream os;
  os << name << " = " << value << " at vertex " << where << ", step " << s.step << ", t = " << s.t;
  return os.str();
}

}  // namespace

RunResult run_from(const State& start, const SurfaceMesh& mesh, const FemOperators& ops,
                   const Parameters& p, const RunConfig& cfg, const SnapshotCallback& on_snapshot) {
  cfg.validate();
  RunResult result;
  Stepper stepper(mesh, ops, p, cfg.dt, cfg.linear_tol, cfg.preconditioner);
  result.series.pool_coefficient = stepper.pool_coefficient();
  result.series.V0 = p.V0;

  State current = start;
  result.series.rows.push_back(
      make_row(current, ops.mass, integrate(ops.mass, current.u + current.v), 0.0, 0));
  if (on_snapshot) on_snapshot(current);

  const long total = static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  const long first_step = current.step;
  const double t0 = current.t;
  long next_snapshot = 1;
  bool snapshot_current = true;

  for (long k = 1; k <= total; ++k) {
    const double prev_integral = integrate(ops.mass, current.u + current.v);
    State next;
    try {
      next = stepper.step(current);
    } catch (const SimulationError& e) {
      result.failed = true;
      result.failure = e.what();
      break;
    }
    next.t = t0 + static_cast<double>(k) * cfg.dt;
    next.step = first_step + k;

    const double residual =
        ((next.u - current.u).lpNorm<Eigen::Infinity>() +
         (next.v - current.v).lpNorm<Eigen::Infinity>()) /
        cfg.dt;
    current = std::move(next);
    result.series.rows.push_back(make_row(current, ops.mass, prev_integral, residual,
                                          stepper.last_stats().iterations));
    snapshot_current = false;

    const double lowest = std::min(current.u.minCoeff(), current.v.minCoeff());
    if (lowest < kNegativityAbort) {
      result.failed = true;
      result.failure = "negative concentration beyond " + std::to_string(kNegativityAbort) +
                       ": " +
                       negativity_message(current, current.u.minCoeff() <= current.v.minCoeff()
                                                       ? "u"
                                                       : "v",
                                          current.u.minCoeff() <= current.v.minCoeff()
                                              ? current.u
                                              : current.v);
      break;
    }
    if (lowest < kNegativityWarn && result.warnings.size() < kMaxWarnings) {
      const bool is_u = current.u.minCoeff() <= current.v.minCoeff();
      result.warnings.push_back("negative concentration: " +
                                negativity_message(current, is_u ? "u" : "v",
                                                   is_u ? current.u : current.v));
    }

    if (current.t >= static_cast<double>(next_snapshot) * cfg.snapshot_interval + t0 - 1e-9 * cfg.dt) {
      while (current.t >= static_cast<double>(next_snapshot) * cfg.snapshot_interval + t0 -
                              1e-9 * cfg.dt) {
        ++next_snapshot;
      }
      if (on_snapshot) on_snapshot(current);
      snapshot_current = true;
    }

    if (cfg.stop_when_stationary && residual < cfg.stationarity_tol) {
      result.converged = true;
      break;
    }
  }
  if (!snapshot_current && on_snapshot) on_snapshot(current);
  result.final_state = std::move(current);
  return result;
}

RunResult run(const SurfaceMesh& mesh, const FemOperators& ops, const Parameters& p,
              const RunConfig& cfg, const SnapshotCallback& on_snapshot) {
  return run_from(initial_state(mesh, cfg, p), mesh, ops, p, cfg, on_snapshot);
}

double conservation_check(const TimeSeries& series) {
  if (series.rows.empty()) throw std::invalid_argument("conservation_check: empty series");
  const double volume = 1.0 / series.pool_coefficient;
  const double reference = series.V0 * volume;
  double worst = 0.0;
  for (std::size_t i = 1; i < series.rows.size(); ++i) {
    const auto& r = series.rows[i];
    worst = std::max(worst, std::abs(r.V * volume + r.prev_integral - reference) / reference);
  }
  return worst;
}

OdeState ode_step(const OdeState& s, const Parameters& p, double dt) {
  const double w = s.u + s.v;
  const double g = p.gamma;
  const auto df = jac_f(s.u, s.v, p);
  const auto dq = jac_q0(w, s.v, p);
  const double fval = f(s.u, s.v, p);
  const double qval = q0(w, s.v, p);
  // (I/dt - g J) delta = g (f, q - f)
  const double a11 = 1.0 / dt - g * df.du;
  const double a12 = -g * df.dv;
  const double a21 = -g * (dq.du - df.du);
  const double a22 = 1.0 / dt - g * (dq.dv - df.dv);
  const double b1 = g * fval;
  const double b2 = g * (qval - fval);
  const double det = a11 * a22 - a12 * a21;
  return {s.u + (b1 * a22 - a12 * b2) / det, s.v + (a11 * b2 - a21 * b1) / det};
}

}  // namespace tmsim

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "tmsim/simulator.hpp"
#include "tmsim/stability.hpp"

using namespace tmsim;

namespace {

struct Fixture {
  explicit Fixture(int level) : mesh(icosphere(level)), ops(FemOperators::assemble(mesh)) {}
  SurfaceMesh mesh;
  FemOperators ops;
  Eigen::Index n() const { return static_cast<Eigen::Index>(mesh.num_vertices()); }
};

State noisy_state(const Fixture& fx, double u, double v, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  State s;
  s.u.resize(fx.n());
  s.v.resize(fx.n());
  for (Eigen::Index i = 0; i < fx.n(); ++i) {
    s.u[i] = u + dist(rng);
    s.v[i] = v + dist(rng);
  }
  s.V = 6.0;
  return s;
}

}  // namespace

TEST(MeshParameters, UseDiscreteGeometry) {
  const SurfaceMesh mesh = icosphere(2);
  const Parameters p = mesh_parameters(Parameters::baseline(), mesh);
  EXPECT_NEAR(p.c, 1.0 / enclosed_volume(mesh), 1e-15);
  EXPECT_NEAR(p.area, surface_area(mesh), 1e-15);
  EXPECT_EQ(p.a3, 160.0);
}

TEST(InitialState, RandomIsReproducibleAndBounded) {
  const Fixture fx(2);
  RunConfig cfg;
  cfg.ic = RandomIC{0.1, 0.3};
  cfg.seed = 17;
  const Parameters p = Parameters::baseline();
  const State a = initial_state(fx.mesh, cfg, p);
  const State b = initial_state(fx.mesh, cfg, p);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_GE(a.u.minCoeff(), 0.1);
  EXPECT_LE(a.u.maxCoeff(), 0.3);
  EXPECT_GE(a.v.minCoeff(), 0.1);
  EXPECT_NEAR(a.V, p.V0 - integrate(fx.ops.mass, a.u + a.v) / enclosed_volume(fx.mesh), 1e-14);
  cfg.seed = 18;
  EXPECT_NE(initial_state(fx.mesh, cfg, p).u, a.u);
}

TEST(InitialState, SteadyStatePlusNoise) {
  const Fixture fx(2);
  RunConfig cfg;
  cfg.ic = SteadyStateNoiseIC{1e-4};
  const Parameters p = Parameters::baseline();
  const SteadyState ss = find_steady_state(mesh_parameters(p, fx.mesh));
  const State s = initial_state(fx.mesh, cfg, p);
  EXPECT_LE((s.u.array() - ss.u_star).abs().maxCoeff(), 1e-4);
  EXPECT_LE((s.v.array() - ss.v_star).abs().maxCoeff(), 1e-4);
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.t_end = cfg.dt / 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.ic = RandomIC{1.0, 0.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Stepper, SystemMatrixMatchesBlockOracle) {
  const Fixture fx(1);
  Parameters p = Parameters::baseline();
  p.a1 = 0.2;
  const double dt = 1e-2;
  const State s = noisy_state(fx, 0.3, 0.2, 0.1, 3);
  Stepper stepper(fx.mesh, fx.ops, p, dt);
  stepper.step(s);

  const auto n = fx.n();
  std::vector<double> fu(n), fv(n), gu(n), gv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Partials df = jac_f(s.u[i], s.v[i], p);
    const Partials dq = jac_q(s.u[i] + s.v[i], s.v[i], s.V, p);
    fu[i] = p.gamma * df.du;
    fv[i] = p.gamma * df.dv;
    gu[i] = p.gamma * (df.du - dq.du);
    gv[i] = p.gamma * (df.dv - dq.dv);
  }
  const Eigen::MatrixXd m = Eigen::MatrixXd(fx.ops.mass);
  const Eigen::MatrixXd a = Eigen::MatrixXd(fx.ops.stiffness);
  const Eigen::MatrixXd wfu = Eigen::MatrixXd(assemble_weighted_mass(fx.mesh, fu));
  const Eigen::MatrixXd wfv = Eigen::MatrixXd(assemble_weighted_mass(fx.mesh, fv));
  const Eigen::MatrixXd wgu = Eigen::MatrixXd(assemble_weighted_mass(fx.mesh, gu));
  const Eigen::MatrixXd wgv = Eigen::MatrixXd(assemble_weighted_mass(fx.mesh, gv));

  const Eigen::MatrixXd k = Eigen::MatrixXd(stepper.system_matrix());
  ASSERT_EQ(k.rows(), 2 * n);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      worst = std::max(worst, std::abs(k(2 * i, 2 * j) - (m(i, j) / dt + a(i, j) - wfu(i, j))));
      worst = std::max(worst, std::abs(k(2 * i, 2 * j + 1) + wfv(i, j)));
      worst = std::max(worst, std::abs(k(2 * i + 1, 2 * j) - wgu(i, j)));
      worst = std::max(worst, std::abs(k(2 * i + 1, 2 * j + 1) -
                                       (m(i, j) / dt + p.d * a(i, j) + wgv(i, j))));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Stepper, SolvesTheBlockSystemAgainstDenseLu) {
  const Fixture fx(1);
  Parameters p = Parameters::baseline();
  const double dt = 1e-3;
  const State s = noisy_state(fx, 0.4, 0.1, 0.05, 5);
  Stepper stepper(fx.mesh, fx.ops, p, dt, 1e-13);
  const State next = stepper.step(s);

  // Right-hand side built independently.
  const auto n = fx.n();
  Vector fe(n), qe(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = s.u[i], v = s.v[i], w = u + v;
    const Partials df = jac_f(u, v, p);
    const Partials dq = jac_q(w, v, s.V, p);
    fe[i] = p.gamma * (f(u, v, p) - df.du * u - df.dv * v);
    qe[i] = p.gamma * (q(w, v, s.V, p) - dq.du * u - dq.dv * v);
  }
  const Vector top = fx.ops.mass * (s.u / dt + fe);
  const Vector bottom = fx.ops.mass * (s.v / dt - fe + qe);
  Vector rhs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs[2 * i] = top[i];
    rhs[2 * i + 1] = bottom[i];
  }
  const Vector x = Eigen::MatrixXd(stepper.system_matrix()).partialPivLu().solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) {
    EXPECT_NEAR(next.u[i], x[2 * i], 1e-10);
    EXPECT_NEAR(next.v[i], x[2 * i + 1], 1e-10);
  }
  EXPECT_EQ(next.step, s.step + 1);
  EXPECT_NEAR(next.t, s.t + dt, 1e-15);
  EXPECT_NEAR(next.V, p.V0 - integrate(fx.ops.mass, s.u + s.v) / enclosed_volume(fx.mesh),
              1e-14);
}

TEST(Stepper, PreconditionersAgree) {
  const Fixture fx(2);
  const Parameters p = Parameters::baseline();
  const State s = noisy_state(fx, 0.4, 0.1, 0.05, 9);
  Stepper ilu(fx.mesh, fx.ops, p, 1e-3, 1e-12, PreconditionerKind::ilu0);
  Stepper jacobi(fx.mesh, fx.ops, p, 1e-3, 1e-12, PreconditionerKind::jacobi);
  Stepper none(fx.mesh, fx.ops, p, 1e-3, 1e-12, PreconditionerKind::none);
  const State a = ilu.step(s), b = jacobi.step(s), c = none.step(s);
  EXPECT_LT((a.u - b.u).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LT((a.v - c.v).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Stepper, HomogeneousSteadyStateIsAFixedPoint) {
  const Fixture fx(3);
  const Parameters p = mesh_parameters(Parameters::baseline(), fx.mesh);
  const SteadyState ss = find_steady_state(p);
  State s;
  s.u = Vector::Constant(fx.n(), ss.u_star);
  s.v = Vector::Constant(fx.n(), ss.v_star);
  s.V = ss.V_star;
  Stepper stepper(fx.mesh, fx.ops, p, 1e-3, 1e-12);
  for (int k = 0; k < 20; ++k) s = stepper.step(s);
  EXPECT_LT((s.u.array() - ss.u_star).abs().maxCoeff(), 1e-12);
  EXPECT_LT((s.v.array() - ss.v_star).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s.V, ss.V_star, 1e-12);
}

TEST(Run, PoolIdentityAndSeries) {
  const Fixture fx(2);
  Parameters p = Parameters::baseline();
  p.gamma = 20.0;
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.stop_when_stationary = false;
  cfg.snapshot_interval = 0.25;
  std::vector<double> snapshot_times;
  const RunResult r =
      run(fx.mesh, fx.ops, p, cfg, [&](const State& s) { snapshot_times.push_back(s.t); });
  ASSERT_FALSE(r.failed) << r.failure;
  EXPECT_EQ(r.series.rows.size(), 101u);
  EXPECT_LT(conservation_check(r.series), 1e-13);
  ASSERT_EQ(snapshot_times.size(), 5u);
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(snapshot_times[k], 0.25 * k, 1e-12);
  EXPECT_NEAR(r.final_state.t, 1.0, 1e-12);
  EXPECT_EQ(r.final_state.step, 100);
  EXPECT_EQ(r.series.rows.front().residual, 0.0);
  for (std::size_t i = 1; i < r.series.rows.size(); ++i) {
    const auto& row = r.series.rows[i];
    const auto& prev = r.series.rows[i - 1];
    EXPECT_NEAR(row.prev_integral, prev.int_u + prev.int_v, 1e-13);
    EXPECT_LE(row.min_u, row.max_u);
  }
}

TEST(Run, ConservedIntegrals) {
  const Fixture fx(2);
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 2.0;
  cfg.stop_when_stationary = false;
  cfg.snapshot_interval = cfg.t_end;

  Parameters closed = Parameters::baseline();
  closed.gamma = 20.0;
  closed.a6 = 0.0;
  closed.a_neg6 = 0.0;
  const RunResult a = run(fx.mesh, fx.ops, closed, cfg);
  ASSERT_FALSE(a.failed) << a.failure;
  const double total0 = a.series.rows.front().int_u + a.series.rows.front().int_v;
  for (const auto& row : a.series.rows) {
    EXPECT_NEAR((row.int_u + row.int_v) / total0, 1.0, 1e-12);
  }

  Parameters inert = Parameters::baseline();
  inert.gamma = 0.0;
  const RunResult b = run(fx.mesh, fx.ops, inert, cfg);
  ASSERT_FALSE(b.failed) << b.failure;
  for (const auto& row : b.series.rows) {
    EXPECT_NEAR(row.int_u / b.series.rows.front().int_u, 1.0, 1e-12);
    EXPECT_NEAR(row.int_v / b.series.rows.front().int_v, 1.0, 1e-12);
  }
  // Pure diffusion flattens the fields.
  EXPECT_LT(b.final_state.v.maxCoeff() - b.final_state.v.minCoeff(), 1e-8);
}

TEST(Run, StopsWhenStationary) {
  const Fixture fx(2);
  const Parameters p = Parameters::baseline();
  const SteadyState ss = find_steady_state(mesh_parameters(p, fx.mesh));
  RunConfig cfg;
  cfg.ic = ConstantIC{ss.u_star, ss.v_star};
  cfg.t_end = 1.0;
  const RunResult r = run(fx.mesh, fx.ops, p, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.final_state.step, 1);
}

TEST(Run, NegativityAbortKeepsHistory) {
  // Coarse mesh with the full reaction rate: the consistent mass matrix
  // produces undershoots that exceed the abort threshold.
  const Fixture fx(3);
  RunConfig cfg;
  cfg.t_end = 1.0;
  cfg.stop_when_stationary = false;
  const RunResult r = run(fx.mesh, fx.ops, Parameters::baseline(), cfg);
  ASSERT_TRUE(r.failed);
  EXPECT_NE(r.failure.find("negative"), std::string::npos);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(static_cast<long>(r.series.rows.size()), r.final_state.step + 1);
  EXPECT_LT(r.final_state.t, 1.0);
}

TEST(Run, ContinuationMatchesSingleRun) {
  const Fixture fx(2);
  Parameters p = Parameters::baseline();
  p.gamma = 20.0;
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.5;
  cfg.stop_when_stationary = false;
  cfg.linear_tol = 1e-13;
  const RunResult first = run(fx.mesh, fx.ops, p, cfg);
  const RunResult second = run_from(first.final_state, fx.mesh, fx.ops, p, cfg);
  RunConfig whole = cfg;
  whole.t_end = 1.0;
  const RunResult full = run(fx.mesh, fx.ops, p, whole);
  EXPECT_NEAR(second.final_state.t, 1.0, 1e-12);
  EXPECT_EQ(second.final_state.step, 100);
  EXPECT_LT((second.final_state.u - full.final_state.u).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Ode, InvariantRegionAndConvergence) {
  const Parameters p = Parameters::baseline();
  const SteadyState ss = find_steady_state(p);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = 0.98 * unit(rng);
    const double u = w * unit(rng);
    OdeState s{u, w - u};
    // Up to t = 50. The step stays well posed while gamma * df/du * dt < 1.
    for (int k = 0; k < 100000; ++k) {
      s = ode_step(s, p, 5e-4);
      ASSERT_GE(s.u, -1e-6);
      ASSERT_GE(s.v, -1e-6);
      ASSERT_LE(s.u + s.v, p.saturation() + 1e-6);
    }
    EXPECT_NEAR(s.u, ss.u_star, 1e-6);
    EXPECT_NEAR(s.v, ss.v_star, 1e-6);
  }
}

TEST(Conservation, CheckDetectsViolations) {
  TimeSeries series;
  series.pool_coefficient = 0.5;
  series.V0 = 10.0;
  SeriesRow first;
  SeriesRow good;
  good.prev_integral = 4.0;
  good.V = 10.0 - 0.5 * 4.0;
  series.rows = {first, good};
  EXPECT_LT(conservation_check(series), 1e-15);
  SeriesRow bad = good;
  bad.V += 1e-6;
  series.rows.push_back(bad);
  EXPECT_NEAR(conservation_check(series), 1e-6 * 2.0 / 20.0, 1e-15);
  EXPECT_THROW(conservation_check(TimeSeries{}), std::invalid_argument);
}

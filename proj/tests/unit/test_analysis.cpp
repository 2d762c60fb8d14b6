#include <cmath>

#include <gtest/gtest.h>

#include "tmsim/analysis.hpp"
#include "tmsim/simulator.hpp"

using namespace tmsim;

namespace {

struct Sphere {
  SurfaceMesh mesh = icosphere(3);
  FemOperators ops = FemOperators::assemble(mesh);

  Vector field(double (*g)(const Vec3&)) const {
    Vector x(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = g(mesh.vertex(i));
    return x;
  }
};

const Sphere& sphere() {
  static const Sphere s;
  return s;
}

RunResult result_with(const Vector& u, bool converged) {
  RunResult r;
  r.final_state.u = u;
  r.final_state.v = Vector::Zero(u.size());
  r.converged = converged;
  return r;
}

}  // namespace

TEST(Heterogeneity, ConstantAndKnownFields) {
  const auto& s = sphere();
  EXPECT_NEAR(heterogeneity(s.field([](const Vec3&) { return 2.0; }), s.ops.mass), 0.0, 1e-14);
  // 1 + z: mean 1, L2 deviation sqrt(int z^2 / 4 pi) = 1/sqrt(3) on the sphere.
  const double h = heterogeneity(s.field([](const Vec3& x) { return 1.0 + x.z(); }), s.ops.mass);
  EXPECT_NEAR(h, 1.0 / std::sqrt(3.0), 5e-3);
}

TEST(LocalMaxima, CountsPolesOfSimpleFields) {
  const auto& s = sphere();
  const auto one = count_local_maxima(s.mesh, s.field([](const Vec3& x) { return x.z(); }));
  EXPECT_EQ(one.count, 1);
  ASSERT_EQ(one.vertices.size(), 1u);
  EXPECT_NEAR(s.mesh.vertex(one.vertices[0]).z(), 1.0, 1e-12);

  const auto two = count_local_maxima(s.mesh, s.field([](const Vec3& x) { return x.z() * x.z(); }));
  EXPECT_EQ(two.count, 2);

  const auto none = count_local_maxima(s.mesh, s.field([](const Vec3&) { return 1.0; }));
  EXPECT_EQ(none.count, 0);
}

TEST(LocalMaxima, ProminenceFiltersSmallBumps) {
  const auto& s = sphere();
  // Large spot at the north pole, a smaller one at the south pole.
  Vector x = s.field([](const Vec3& p) {
    return std::exp(8.0 * (p.z() - 1.0)) + 0.2 * std::exp(8.0 * (-p.z() - 1.0));
  });
  EXPECT_EQ(count_local_maxima(s.mesh, x, 0.5).count, 1);
  EXPECT_EQ(count_local_maxima(s.mesh, x, 0.0).count, 2);
}

TEST(ModeAmplitude, ProjectsOntoNormalizedModes) {
  const auto& s = sphere();
  const EigenPairs pairs = laplace_beltrami_eigs(s.ops.mass, s.ops.stiffness, 4);
  const Vector w = pairs.vectors.col(2);
  EXPECT_NEAR(mode_amplitude(w, w, s.ops.mass), 1.0, 1e-10);
  const Vector shifted = 3.0 * w + Vector::Constant(w.size(), 5.0);
  EXPECT_NEAR(mode_amplitude(shifted, w, s.ops.mass), 3.0, 1e-10);
  EXPECT_NEAR(mode_amplitude(pairs.vectors.col(1), w, s.ops.mass), 0.0, 1e-10);
}

TEST(Classify, ThreeOutcomes) {
  const auto& s = sphere();
  const Vector flat = s.field([](const Vec3&) { return 0.7; });
  const Vector spot = s.field([](const Vec3& p) { return 0.1 + std::exp(6.0 * (p.x() - 1.0)); });

  const PatternSummary homogeneous = classify(result_with(flat, true), s.mesh, s.ops.mass);
  EXPECT_EQ(homogeneous.classification, PatternClass::homogeneous);
  EXPECT_EQ(homogeneous.n_maxima, 0);
  EXPECT_TRUE(homogeneous.maxima.empty());

  const PatternSummary pattern = classify(result_with(spot, true), s.mesh, s.ops.mass);
  EXPECT_EQ(pattern.classification, PatternClass::pattern);
  EXPECT_EQ(pattern.n_maxima, 1);
  ASSERT_GE(pattern.max_location, 0);
  EXPECT_NEAR(s.mesh.vertex(pattern.max_location).x(), 1.0, 1e-12);

  const PatternSummary running = classify(result_with(spot, false), s.mesh, s.ops.mass);
  EXPECT_EQ(running.classification, PatternClass::not_converged);
  EXPECT_FALSE(running.converged);

  EXPECT_EQ(to_string(PatternClass::pattern), "pattern");
  EXPECT_EQ(to_string(PatternClass::not_converged), "not_converged");
}

TEST(GrowthFit, RecoversExponentialRate) {
  std::vector<double> t, a;
  for (int k = 0; k <= 50; ++k) {
    t.push_back(0.1 * k);
    a.push_back(-3e-6 * std::exp(0.37 * 0.1 * k));
  }
  const GrowthFit fit = fit_growth_rate(t, a);
  EXPECT_NEAR(fit.rate, 0.37, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3e-6), 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_THROW(fit_growth_rate(std::vector<double>{1.0}, std::vector<double>{1.0}),
               std::invalid_argument);
}

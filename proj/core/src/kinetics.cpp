#include "tmsim/kinetics.hpp"

#include <algorithm>
#include <cmath>

namespace tmsim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void Parameters::validate() const {
  require(finite_nonneg(a1), "a1 must be nonnegative");
  require(finite_pos(a2), "a2 must be positive");
  require(finite_nonneg(a3), "a3 must be nonnegative");
  require(finite_nonneg(a4), "a4 must be nonnegative");
  require(finite_pos(a5), "a5 must be positive");
  require(finite_nonneg(a6), "a6 must be nonnegative");
  require(finite_nonneg(a_neg6), "a_neg6 must be nonnegative");
  require(finite_pos(d), "d must be positive");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be nonnegative");
  require(finite_pos(V0), "V0 must be positive");
  require(finite_pos(c), "c must be positive");
  require(finite_pos(area), "area must be positive");
}

void DimensionalParameters::validate() const {
  require(finite_nonneg(k1), "k1 must be nonnegative");
  require(finite_nonneg(k2), "k2 must be nonnegative");
  require(finite_pos(k3), "k3 must be positive");
  require(finite_pos(k4), "k4 must be positive");
  require(finite_pos(k5), "k5 must be positive");
  require(finite_pos(k_neg5), "k_neg5 must be positive");
  require(finite_pos(b6), "b6 must be positive");
  require(finite_pos(b_neg6), "b_neg6 must be positive");
  require(finite_pos(g0bar), "g0bar must be positive");
  require(finite_pos(du), "du must be positive");
  require(finite_pos(dv), "dv must be positive");
  require(finite_pos(Dcyt), "Dcyt must be positive");
  require(finite_pos(cmax), "cmax must be positive");
  require(finite_pos(R), "R must be positive");
  require(finite_pos(vol_over_area), "vol_over_area must be positive");
  require(finite_pos(V_init), "V_init must be positive");
  require(finite_pos(area), "area must be positive");
}

Parameters nondimensionalize(const DimensionalParameters& dp) {
  dp.validate();
  constexpr double unit_length_sq = 1.0;  // (1 m)^2
  const double K5 = dp.k5 / dp.k_neg5;

  Parameters p;
  p.a1 = unit_length_sq * dp.k1 * dp.g0bar / dp.du;
  p.a2 = 1.0 / (K5 * dp.cmax);
  p.a3 = dp.k1 > 0.0 ? (dp.k2 / dp.k1) * p.a1 : unit_length_sq * dp.k2 * dp.g0bar / dp.du;
  p.a4 = unit_length_sq * dp.k3 / (dp.du * dp.cmax);
  p.a5 = dp.k4 / dp.cmax;
  p.a6 = unit_length_sq * dp.b6 * dp.cmax * dp.vol_over_area / dp.du;
  p.a_neg6 = unit_length_sq * dp.b_neg6 / dp.du;
  p.d = dp.dv / dp.du;
  p.gamma = dp.R * dp.R / unit_length_sq;
  p.V0 = dp.R * dp.V_init / dp.cmax;
  p.area = dp.area;
  // |B~| = |B| / R^3 = vol_over_area * |Gamma~|
  p.c = 1.0 / (dp.vol_over_area * dp.area);
  return p;
}

double f(double u, double v, const Parameters& p) {
  return (p.a1 + (p.a3 - p.a1) * u / (p.a2 + u)) * v - p.a4 * u / (p.a5 + u);
}

double q(double w, double v, double V, const Parameters& p) {
  return p.a6 * V * std::max(1.0 - w, 0.0) - p.a_neg6 * v;
}

double V_of_integral(double total, const Parameters& p) { return p.V0 - p.c * total; }

double q0(double w, double v, const Parameters& p) {
  return q(w, v, p.V0 - p.cG() * w, p);
}

double q1(double w, double v, double Vstar, const Parameters& p) {
  return p.a6 * Vstar * (1.0 - w) - p.a_neg6 * v;
}

Partials jac_f(double u, double v, const Parameters& p) {
  const double su = p.a2 + u;
  const double sa = p.a5 + u;
  return {p.a2 * (p.a3 - p.a1) / (su * su) * v - p.a4 * p.a5 / (sa * sa),
          p.a1 + (p.a3 - p.a1) * u / su, false};
}

Partials jac_q(double w, double v, double V, const Parameters& p) {
  (void)v;
  if (w > 1.0) return {0.0, -p.a_neg6, false};
  const double dw = -p.a6 * V;
  return {dw, dw - p.a_neg6, w == 1.0};
}

Partials jac_q0(double w, double v, const Parameters& p) {
  (void)v;
  if (w > 1.0) return {0.0, -p.a_neg6, false};
  const double dw = -p.a6 * p.cG() * (1.0 + p.m() - 2.0 * w);
  return {dw, dw - p.a_neg6, w == 1.0};
}

Partials jac_q1(double Vstar, const Parameters& p) {
  return {-p.a6 * Vstar, -p.a6 * Vstar - p.a_neg6, false};
}

QssComplex qss_complex(double u, double g0bar, double K5) {
  const double x = K5 * u;
  const double bound = std::isinf(x) ? 1.0 : x / (1.0 + x);
  return {g0bar * bound, g0bar * (1.0 - bound)};
}

}  // namespace tmsim

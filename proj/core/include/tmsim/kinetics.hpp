#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace tmsim {

/// Dimensionless model constants of the reduced membrane system.
///
/// `c` is the inverse enclosed volume and `area` the surface area of the
/// dimensionless domain; only their product enters the homogeneous analysis.
/// Defaults describe the unit sphere.
struct Parameters {
  double a1 = 0.0;
  double a2 = 20.0;
  double a3 = 160.0;
  double a4 = 1.0;
  double a5 = 0.5;
  double a6 = 0.1;
  double a_neg6 = 1.0;
  double d = 1000.0;
  double gamma = 400.0;
  double V0 = 10.0;
  double c = 3.0 / (4.0 * std::numbers::pi);
  double area = 4.0 * std::numbers::pi;

  /// c |Gamma|
  double cG() const { return c * area; }
  /// Total pool expressed as a surface density, V0 / (c |Gamma|).
  double m() const { return V0 / cG(); }
  /// min{1, m}: upper bound of u + v in the invariant region.
  double saturation() const { return m() < 1.0 ? m() : 1.0; }

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// Reference parameter set on the unit sphere (d = 1000, gamma = 400).
  static Parameters baseline() { return {}; }
};

/// Rates and scales in SI units, mapped to Parameters by nondimensionalize().
struct DimensionalParameters {
  double k1 = 0.0;      // m^2 / (mol s)
  double k2 = 0.0;      // m^2 / (mol s)
  double k3 = 0.0;      // mol / (m^2 s)
  double k4 = 0.0;      // mol / m^2
  double k5 = 0.0;      // m^2 / (mol s)
  double k_neg5 = 0.0;  // 1 / s
  double b6 = 0.0;      // m^2 / (mol s)
  double b_neg6 = 0.0;  // 1 / s
  double g0bar = 0.0;   // mol / m^2
  double du = 0.0;      // m^2 / s
  double dv = 0.0;      // m^2 / s
  double Dcyt = 0.0;    // m^2 / s
  double cmax = 0.0;    // mol / m^2
  double R = 0.0;       // m
  double vol_over_area = 1.0 / 3.0;  // |B| / (|Gamma| R), 1/3 for a ball
  double V_init = 0.0;  // mol / m^3
  /// Dimensionless surface area |Gamma| / R^2 of the scaled domain.
  double area = 4.0 * std::numbers::pi;

  void validate() const;
};

Parameters nondimensionalize(const DimensionalParameters& dp);

/// Activation minus deactivation, f(u, v).
double f(double u, double v, const Parameters& p);

/// Membrane attachment flux q(w, v, V) with w = u + v.
double q(double w, double v, double V, const Parameters& p);

/// Cytosolic pool for a given membrane total: V0 - c * total.
double V_of_integral(double total, const Parameters& p);

/// q for spatially homogeneous states, where V = V0 - c|Gamma| w.
double q0(double w, double v, const Parameters& p);

/// q with the pool frozen at Vstar and without the positive part.
double q1(double w, double v, double Vstar, const Parameters& p);

/// Partial derivatives with respect to u and v. `at_kink` marks evaluation
/// exactly on u + v = 1, where the interior branch is reported.
struct Partials {
  double du = 0.0;
  double dv = 0.0;
  bool at_kink = false;
};

Partials jac_f(double u, double v, const Parameters& p);
Partials jac_q(double w, double v, double V, const Parameters& p);
Partials jac_q0(double w, double v, const Parameters& p);
Partials jac_q1(double Vstar, const Parameters& p);

struct QssComplex {
  double complex_density;  // effector-GEF-GTPase complex
  double free_gef;
};

/// Quasi-steady complex under total GEF conservation.
QssComplex qss_complex(double u, double g0bar, double K5);

}  // namespace tmsim

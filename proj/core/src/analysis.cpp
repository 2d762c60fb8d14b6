#include "tmsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tmsim/simulator.hpp"

namespace tmsim {

std::string to_string(PatternClass c) {
  switch (c) {
    case PatternClass::homogeneous: return "homogeneous";
    case PatternClass::pattern: return "pattern";
    case PatternClass::not_converged: return "not_converged";
  }
  return "unknown";
}

double heterogeneity(const Vector& field, const SparseMatrix& mass) {
  const double area = mass.sum();
  const double mean = integrate(mass, field) / area;
  const Vector dev = field.array() - mean;
  const double sq = std::max(dev.dot(mass * dev), 0.0);
  return std::sqrt(sq / area) / std::max(std::abs(mean), 1e-12);
}

LocalMaxima count_local_maxima(const SurfaceMesh& mesh, const Vector& field, double prominence) {
  if (!(prominence >= 0.0)) throw std::invalid_argument("prominence must be nonnegative");
  const auto n = mesh.num_vertices();
  if (static_cast<std::size_t>(field.size()) != n) {
    throw std::invalid_argument("field size does not match the mesh");
  }
  const auto areas = vertex_areas(mesh);
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weighted += areas[i] * field[static_cast<Eigen::Index>(i)];
    total += areas[i];
  }
  const double mean = weighted / total;
  const double threshold = mean + prominence * (field.maxCoeff() - mean);

  LocalMaxima out;
  for (std::size_t i = 0; i < n; ++i) {
    const double value = field[static_cast<Eigen::Index>(i)];
    if (!(value > threshold)) continue;
    bool is_max = true;
    for (const int j : mesh.neighbors(i)) {
      if (!(value > field[j])) {
        is_max = false;
        break;
      }
    }
    if (is_max) out.vertices.push_back(static_cast<int>(i));
  }
  out.count = static_cast<int>(out.vertices.size());
  return out;
}

double mode_amplitude(const Vector& field, const Vector& eigenvector, const SparseMatrix& mass) {
  const double mean = integrate(mass, field) / mass.sum();
  const Vector dev = field.array() - mean;
  return dev.dot(mass * eigenvector);
}

PatternSummary classify(const RunResult& result, const SurfaceMesh& mesh, const SparseMatrix& mass,
                        const ClassifyThresholds& thresholds) {
  const Vector& u = result.final_state.u;
  PatternSummary s;
  s.converged = result.converged && !result.failed;
  s.heterogeneity = heterogeneity(u, mass);
  Eigen::Index arg = 0;
  u.maxCoeff(&arg);
  s.max_location = static_cast<int>(arg);
  const auto maxima = count_local_maxima(mesh, u, thresholds.prominence);
  s.n_maxima = maxima.count;
  s.maxima = maxima.vertices;
  if (!s.converged) {
    s.classification = PatternClass::not_converged;
  } else if (s.heterogeneity < thresholds.heterogeneity) {
    s.classification = PatternClass::homogeneous;
    s.n_maxima = 0;
    s.maxima.clear();
  } else if (s.n_maxima >= 1) {
    s.classification = PatternClass::pattern;
  } else {
    s.classification = PatternClass::not_converged;
  }
  return s;
}

GrowthFit fit_growth_rate(std::span<const double> times, std::span<const double> amplitudes) {
  if (times.size() != amplitudes.size() || times.size() < 2) {
    throw std::invalid_argument("fit_growth_rate needs at least two matching samples");
  }
  const auto n = static_cast<double>(times.size());
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double y = std::log(std::abs(amplitudes[i]));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    syy += y * y;
  }
  const double cov = sty - st * sy / n;
  const double var_t = stt - st * st / n;
  const double var_y = syy - sy * sy / n;
  if (!(var_t > 0.0)) throw std::invalid_argument("fit_growth_rate: times are all equal");
  GrowthFit fit;
  fit.rate = cov / var_t;
  fit.intercept = (sy - fit.rate * st) / n;
  fit.r_squared = var_y > 0.0 ? cov * cov / (var_t * var_y) : 1.0;
  return fit;
}

}  // namespace tmsim

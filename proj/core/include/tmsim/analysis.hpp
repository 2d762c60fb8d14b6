#pragma once

#include <span>
#include <string>
#include <vector>

#include "tmsim/fem.hpp"
#include "tmsim/mesh.hpp"

namespace tmsim {

struct RunResult;

enum class PatternClass { homogeneous, pattern, not_converged };

std::string to_string(PatternClass c);

struct PatternSummary {
  PatternClass classification = PatternClass::not_converged;
  int n_maxima = 0;
  std::vector<int> maxima;
  double heterogeneity = 0.0;
  int max_location = -1;  ///< vertex holding the global maximum of u
  bool converged = false;
};

struct ClassifyThresholds {
  double heterogeneity = 1e-3;
  double prominence = 0.5;
};

/// Relative L2 deviation from the mean: sqrt(int (x - mean)^2 / |Gamma|) /
/// max(|mean|, 1e-12).
double heterogeneity(const Vector& field, const SparseMatrix& mass);

struct LocalMaxima {
  int count = 0;
  std::vector<int> vertices;
};

/// Strict one-ring maxima exceeding mean + prominence (max - mean), where the
/// mean is weighted by lumped vertex areas.
LocalMaxima count_local_maxima(const SurfaceMesh& mesh, const Vector& field,
                               double prominence = 0.5);

/// <field - mean, w>_M for an M-normalized eigenvector w.
double mode_amplitude(const Vector& field, const Vector& eigenvector, const SparseMatrix& mass);

PatternSummary classify(const RunResult& result, const SurfaceMesh& mesh, const SparseMatrix& mass,
                        const ClassifyThresholds& thresholds = {});

struct GrowthFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (t, log|a|).
GrowthFit fit_growth_rate(std::span<const double> times, std::span<const double> amplitudes);

}  // namespace tmsim

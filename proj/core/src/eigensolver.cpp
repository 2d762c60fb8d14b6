#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "tmsim/fem.hpp"

namespace tmsim {

namespace {

double inf_norm(const SparseMatrix& a) {
  double norm = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) row += std::abs(it.value());
    norm = std::max(norm, row);
  }
  return norm;
}

EigenPairs dense_eigs(const SparseMatrix& mass, const SparseMatrix& stiffness, int k) {
  const Eigen::MatrixXd a = Eigen::MatrixXd(stiffness);
  const Eigen::MatrixXd m = Eigen::MatrixXd(mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, m);
  if (solver.info() != Eigen::Success) {
    throw EigenSolverError("dense generalized eigensolver failed");
  }
  return {solver.eigenvalues().head(k), solver.eigenvectors().leftCols(k)};
}

// M-orthonormalizes the columns of w against the first `filled` columns of q
// (two passes of block Gram-Schmidt) and then among themselves. Returns the
// number of independent columns kept, which are stored in w's leading columns.
int orthonormalize_block(const Eigen::MatrixXd& q, Eigen::Index filled, const SparseMatrix& mass,
                         Eigen::MatrixXd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    if (filled > 0) {
      const Eigen::MatrixXd mw = mass * w;
      w.noalias() -= q.leftCols(filled) * (q.leftCols(filled).transpose() * mw);
    }
  }
  Eigen::MatrixXd gram = w.transpose() * (mass * w);
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  int kept = 0;
  Eigen::MatrixXd basis(w.rows(), w.cols());
  for (Eigen::Index j = es.eigenvalues().size(); j-- > 0;) {
    const double ev = es.eigenvalues()[j];
    if (!(ev > 1e-12 * std::max(top, 1e-300)) || ev <= 0.0) continue;
    basis.col(kept++) = w * es.eigenvectors().col(j) / std::sqrt(ev);
  }
  // A second projection removes what the scaling amplified.
  w = basis.leftCols(kept);
  if (kept > 0 && filled > 0) {
    const Eigen::MatrixXd mw = mass * w;
    w.noalias() -= q.leftCols(filled) * (q.leftCols(filled).transpose() * mw);
  }
  for (int j = 0; j < kept; ++j) {
    const double norm = std::sqrt(std::max(w.col(j).dot(mass * w.col(j)), 0.0));
    if (norm > 0.0) w.col(j) /= norm;
  }
  return kept;
}

// Shift-invert block Krylov with Rayleigh-Ritz projection. The block size
// exceeds the largest exact multiplicity of the icosahedral symmetry group,
// so degenerate eigenspaces are resolved in full.
EigenPairs krylov_eigs(const SparseMatrix& mass, const SparseMatrix& stiffness, int k,
                       const EigenOptions& options) {
  const auto n = mass.rows();
  constexpr int kBlock = 8;

  using ColMatrix = Eigen::SparseMatrix<double>;
  const ColMatrix shifted = ColMatrix(stiffness) + options.shift * ColMatrix(mass);
  Eigen::SimplicialLDLT<ColMatrix> factor(shifted);
  if (factor.info() != Eigen::Success) {
    throw EigenSolverError("factorization of A + shift M failed");
  }

  const double a_norm = inf_norm(stiffness);
  const double m_norm = inf_norm(mass);

  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::Index dim = std::min<Eigen::Index>(n, 2 * k + 4 * kBlock);

  for (int attempt = 0; attempt < options.max_restarts; ++attempt) {
    Eigen::MatrixXd q(n, dim);
    Eigen::Index filled = 0;
    Eigen::MatrixXd block(n, kBlock);
    for (Eigen::Index j = 0; j < kBlock; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) block(i, j) = dist(rng);
    }
    block.col(0).setOnes();
    while (filled < dim) {
      const int kept = orthonormalize_block(q, filled, mass, block);
      if (kept == 0) break;
      const Eigen::Index take = std::min<Eigen::Index>(kept, dim - filled);
      q.middleCols(filled, take) = block.leftCols(take);
      const Eigen::MatrixXd rhs = mass * q.middleCols(filled, take);
      filled += take;
      block = factor.solve(rhs);
      if (factor.info() != Eigen::Success) throw EigenSolverError("shift-invert solve failed");
    }
    if (filled < k) throw EigenSolverError("Krylov space collapsed below the requested size");

    const Eigen::MatrixXd basis = q.leftCols(filled);
    const Eigen::MatrixXd a_basis = stiffness * basis;
    Eigen::MatrixXd reduced = basis.transpose() * a_basis;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::MatrixXd gram = basis.transpose() * (mass * basis);
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(reduced, gram);
    if (ritz.info() != Eigen::Success) throw EigenSolverError("Rayleigh-Ritz projection failed");

    const Eigen::MatrixXd coeffs = ritz.eigenvectors().leftCols(k);
    Eigen::MatrixXd x = basis * coeffs;
    const Eigen::MatrixXd ax = a_basis * coeffs;
    const Eigen::MatrixXd mx = mass * x;
    const Eigen::VectorXd values = ritz.eigenvalues().head(k);
    // Normwise backward error of each pair.
    bool converged = true;
    for (int j = 0; j < k && converged; ++j) {
      const double residual = (ax.col(j) - values[j] * mx.col(j)).norm();
      const double scale = (a_norm + std::abs(values[j]) * m_norm) * x.col(j).norm();
      converged = residual <= options.tol * scale;
    }
    if (converged) return {values, x};
    if (dim == n) break;
    dim = std::min<Eigen::Index>(n, 2 * dim);
  }
  throw EigenSolverError("block Krylov eigensolver did not reach the requested accuracy");
}

}  // namespace

EigenPairs laplace_beltrami_eigs(const SparseMatrix& mass, const SparseMatrix& stiffness,
                                 int k, const EigenOptions& options) {
  const auto n = mass.rows();
  if (mass.cols() != n || stiffness.rows() != n || stiffness.cols() != n) {
    throw EigenSolverError("mass and stiffness dimensions disagree");
  }
  if (k < 1 || k >= n) {
    throw EigenSolverError("requested " + std::to_string(k) +
                           " eigenpairs; need 1 <= k < n = " + std::to_string(n));
  }
  const bool dense = n <= options.dense_limit || 2 * k + 32 > static_cast<int>(n) / 2;
  EigenPairs pairs = dense ? dense_eigs(mass, stiffness, k)
                           : krylov_eigs(mass, stiffness, k, options);

  // Normalize sign so that each vector's largest-magnitude entry is positive.
  for (Eigen::Index j = 0; j < pairs.vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    pairs.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (pairs.vectors(arg, j) < 0) pairs.vectors.col(j) *= -1.0;
  }
  return pairs;
}

std::vector<EigenCluster> cluster_eigenvalues(const Vector& values, double rel_tol) {
  std::vector<EigenCluster> clusters;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double lambda = values[i];
    if (!clusters.empty()) {
      auto& last = clusters.back();
      const double prev = values[i - 1];
      if (std::abs(lambda - prev) <= rel_tol * std::max(1.0, std::abs(lambda))) {
        last.mean = (last.mean * last.multiplicity + lambda) / (last.multiplicity + 1);
        ++last.multiplicity;
        continue;
      }
    }
    clusters.push_back({lambda, 1, static_cast<int>(i)});
  }
  return clusters;
}

}  // namespace tmsim

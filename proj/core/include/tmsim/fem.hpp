#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tmsim/mesh.hpp"

namespace tmsim {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class FemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the iterative solver breaks down or runs out of iterations.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  /// Final relative residual ||b - Ax|| / ||b||.
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compressed row pattern of the P1 operators on a mesh (vertex graph plus
/// diagonal) together with, for every triangle, the nine value slots its
/// local matrix scatters into. All P1 matrices on one mesh share it, so
/// repeated assembly only rewrites values.
class MeshPattern {
 public:
  explicit MeshPattern(const SurfaceMesh& mesh);

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return col_index_.size(); }

  /// A matrix with this pattern and all stored values zero.
  SparseMatrix zero_matrix() const;

  /// Slot of local entry (i, j) of triangle t, row-major over i, j in 0..2.
  const std::array<int, 9>& slots(std::size_t t) const { return slots_[t]; }

 private:
  std::size_t n_;
  std::vector<int> row_start_;
  std::vector<int> col_index_;
  std::vector<std::array<int, 9>> slots_;
};

/// Mass and stiffness matrices of the P1 space on one mesh.
struct FemOperators {
  SparseMatrix mass;
  SparseMatrix stiffness;

  static FemOperators assemble(const SurfaceMesh& mesh);
};

SparseMatrix assemble_mass(const SurfaceMesh& mesh);
SparseMatrix assemble_stiffness(const SurfaceMesh& mesh);

/// Galerkin matrix (w psi_i, psi_j) with w interpolated linearly on each
/// triangle and integrated exactly.
SparseMatrix assemble_weighted_mass(const SurfaceMesh& mesh, std::span<const double> weights);

/// Local 3x3 element matrices, row-major.
std::array<double, 9> element_mass(double area);
std::array<double, 9> element_stiffness(const Vec3& p0, const Vec3& p1, const Vec3& p2);
std::array<double, 9> element_weighted_mass(double area, const std::array<double, 3>& w);

/// Writes weighted-mass values into `values`, which must follow the pattern's
/// slot layout (e.g. valuePtr() of pattern.zero_matrix()).
void fill_weighted_mass(const SurfaceMesh& mesh, const MeshPattern& pattern,
                        std::span<const double> weights, std::span<double> values);

/// 1^T M field, i.e. the integral of the interpolated field over the surface.
double integrate(const SparseMatrix& mass, const Vector& field);

// --- linear solver ---------------------------------------------------------

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(const Vector& in, Vector& out) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(const Vector& in, Vector& out) const override { out = in; }
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const SparseMatrix& a);
  void apply(const Vector& in, Vector& out) const override;

 private:
  Vector inv_diag_;
};

/// Zero fill-in incomplete LU on the matrix's own sparsity pattern.
class Ilu0Preconditioner final : public Preconditioner {
 public:
  Ilu0Preconditioner() = default;
  explicit Ilu0Preconditioner(const SparseMatrix& a) { compute(a); }

  /// Refactors for new values; the pattern may change between calls.
  void compute(const SparseMatrix& a);
  void apply(const Vector& in, Vector& out) const override;

 private:
  std::vector<int> outer_;
  std::vector<int> inner_;
  std::vector<int> diag_;
  std::vector<double> values_;
};

enum class PreconditionerKind { none, jacobi, ilu0 };

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 0;  ///< 0 selects 10 * n
  PreconditionerKind preconditioner = PreconditionerKind::jacobi;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  ///< final relative residual of the unpreconditioned system
};

/// Right-preconditioned BiCGStab. `x` holds the initial guess on entry and
/// the solution on exit. Throws SolverError on breakdown or when max_iter is
/// exhausted before ||b - Ax|| <= tol ||b||.
SolveStats bicgstab(const SparseMatrix& a, const Vector& b, Vector& x,
                    const Preconditioner& precond, double tol, int max_iter);

Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b,
                          double tol = 1e-10, int max_iter = 0);

Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b,
                          const SolverOptions& options, SolveStats* stats = nullptr);

// --- Laplace-Beltrami eigenpairs --------------------------------------------

struct EigenPairs {
  Vector values;          ///< ascending
  Eigen::MatrixXd vectors;  ///< columns, M-orthonormal
};

struct EigenOptions {
  double tol = 1e-10;     ///< normwise backward error target per pair
  int max_restarts = 8;   ///< Krylov dimension doublings before giving up
  double shift = 1.0;     ///< factorizes A + shift * M
  int dense_limit = 500;  ///< use the dense solver up to this many unknowns
};

/// k smallest eigenpairs of the generalized problem A w = lambda M w.
EigenPairs laplace_beltrami_eigs(const SparseMatrix& mass, const SparseMatrix& stiffness,
                                 int k, const EigenOptions& options = {});

/// Groups ascending eigenvalues whose gap is within rel_tol * max(1, lambda).
struct EigenCluster {
  double mean;
  int multiplicity;
  int first_index;
};
std::vector<EigenCluster> cluster_eigenvalues(const Vector& values, double rel_tol = 1e-2);

void write_matrix_market(const SparseMatrix& matrix, const std::filesystem::path& path);

}  // namespace tmsim

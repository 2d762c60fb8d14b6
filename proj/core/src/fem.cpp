#include "tmsim/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace tmsim {

MeshPattern::MeshPattern(const SurfaceMesh& mesh) : n_(mesh.num_vertices()) {
  row_start_.assign(n_ + 1, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    row_start_[i + 1] = row_start_[i] + static_cast<int>(mesh.neighbors(i).size()) + 1;
  }
  col_index_.resize(static_cast<std::size_t>(row_start_.back()));
  for (std::size_t i = 0; i < n_; ++i) {
    auto out = col_index_.begin() + row_start_[i];
    const auto ring = mesh.neighbors(i);
    // ring is sorted; splice the diagonal in order
    const auto split = std::lower_bound(ring.begin(), ring.end(), static_cast<int>(i));
    out = std::copy(ring.begin(), split, out);
    *out++ = static_cast<int>(i);
    std::copy(split, ring.end(), out);
  }

  slots_.resize(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int a = 0; a < 3; ++a) {
      const auto row_begin = col_index_.begin() + row_start_[tri[a]];
      const auto row_end = col_index_.begin() + row_start_[tri[a] + 1];
      for (int b = 0; b < 3; ++b) {
        const auto it = std::lower_bound(row_begin, row_end, tri[b]);
        slots_[t][3 * a + b] = static_cast<int>(it - col_index_.begin());
      }
    }
  }
}

SparseMatrix MeshPattern::zero_matrix() const {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(col_index_.size());
  for (std::size_t i = 0; i < n_; ++i) {
    for (int p = row_start_[i]; p < row_start_[i + 1]; ++p) {
      entries.emplace_back(static_cast<int>(i), col_index_[p], 0.0);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  if (static_cast<std::size_t>(m.nonZeros()) != col_index_.size()) {
    throw FemError("sparsity pattern lost explicit zeros during construction");
  }
  return m;
}

std::array<double, 9> element_mass(double area) {
  const double d = area / 6.0;
  const double o = area / 12.0;
  return {d, o, o, o, d, o, o, o, d};
}

std::array<double, 9> element_stiffness(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  // Edge opposite each vertex; grad psi_i is the in-plane rotation of e_i
  // scaled by 1/(2|T|), so |T| grad psi_i . grad psi_j = e_i . e_j / (4|T|).
  const std::array<Vec3, 3> e = {p2 - p1, p0 - p2, p1 - p0};
  const double area = 0.5 * e[2].cross(-e[1]).norm();
  std::array<double, 9> k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k[3 * i + j] = e[i].dot(e[j]) / (4.0 * area);
  }
  return k;
}

std::array<double, 9> element_weighted_mass(double area, const std::array<double, 3>& w) {
  // Exact integrals of barycentric monomials:
  //   int l_i^3 = |T|/10, int l_i^2 l_j = |T|/30, int l_i l_j l_k = |T|/60.
  const double sum = w[0] + w[1] + w[2];
  std::array<double, 9> m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) {
        m[3 * i + j] = area * (w[i] / 10.0 + (sum - w[i]) / 30.0);
      } else {
        const double wk = sum - w[i] - w[j];
        m[3 * i + j] = area * ((w[i] + w[j]) / 30.0 + wk / 60.0);
      }
    }
  }
  return m;
}

namespace {

template <typename LocalFn>
SparseMatrix assemble_with(const SurfaceMesh& mesh, LocalFn&& local) {
  const MeshPattern pattern(mesh);
  SparseMatrix m = pattern.zero_matrix();
  double* values = m.valuePtr();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto k = local(t);
    const auto& slots = pattern.slots(t);
    for (int e = 0; e < 9; ++e) values[slots[e]] += k[e];
  }
  return m;
}

}  // namespace

SparseMatrix assemble_mass(const SurfaceMesh& mesh) {
  const auto areas = mesh.triangle_areas();
  return assemble_with(mesh, [&](std::size_t t) { return element_mass(areas[t]); });
}

SparseMatrix assemble_stiffness(const SurfaceMesh& mesh) {
  const auto areas = mesh.triangle_areas();
  return assemble_with(mesh, [&](std::size_t t) {
    if (!(areas[t] > kMinTriangleArea)) {
      throw FemError("degenerate triangle " + std::to_string(t) +
                     " in stiffness assembly (area " + std::to_string(areas[t]) + ")");
    }
    const auto& [a, b, c] = mesh.triangle(t);
    return element_stiffness(mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
  });
}

void fill_weighted_mass(const SurfaceMesh& mesh, const MeshPattern& pattern,
                        std::span<const double> weights, std::span<double> values) {
  if (weights.size() != mesh.num_vertices()) {
    throw FemError("weight vector has " + std::to_string(weights.size()) +
                   " entries, mesh has " + std::to_string(mesh.num_vertices()) +
                   " vertices");
  }
  if (values.size() != pattern.nonzeros()) {
    throw FemError("value buffer does not match the mesh pattern");
  }
  std::fill(values.begin(), values.end(), 0.0);
  const auto areas = mesh.triangle_areas();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& [a, b, c] = mesh.triangle(t);
    const auto k = element_weighted_mass(areas[t], {weights[a], weights[b], weights[c]});
    const auto& slots = pattern.slots(t);
    for (int e = 0; e < 9; ++e) values[slots[e]] += k[e];
  }
}

SparseMatrix assemble_weighted_mass(const SurfaceMesh& mesh, std::span<const double> weights) {
  const MeshPattern pattern(mesh);
  SparseMatrix m = pattern.zero_matrix();
  fill_weighted_mass(mesh, pattern, weights,
                     std::span<double>(m.valuePtr(), static_cast<std::size_t>(m.nonZeros())));
  return m;
}

FemOperators FemOperators::assemble(const SurfaceMesh& mesh) {
  return {assemble_mass(mesh), assemble_stiffness(mesh)};
}

double integrate(const SparseMatrix& mass, const Vector& field) {
  if (mass.cols() != field.size()) {
    throw FemError("integrate: matrix has " + std::to_string(mass.cols()) +
                   " columns, field has " + std::to_string(field.size()) + " entries");
  }
  return (mass * field).sum();
}

// --- preconditioners ---------------------------------------------------------

JacobiPreconditioner::JacobiPreconditioner(const SparseMatrix& a)
    : inv_diag_(a.diagonal()) {
  for (Eigen::Index i = 0; i < inv_diag_.size(); ++i) {
    inv_diag_[i] = inv_diag_[i] != 0.0 ? 1.0 / inv_diag_[i] : 1.0;
  }
}

void JacobiPreconditioner::apply(const Vector& in, Vector& out) const {
  out = inv_diag_.cwiseProduct(in);
}

void Ilu0Preconditioner::compute(const SparseMatrix& a) {
  if (!a.isCompressed()) throw FemError("ILU(0) requires a compressed matrix");
  const auto n = static_cast<std::size_t>(a.rows());
  outer_.assign(a.outerIndexPtr(), a.outerIndexPtr() + n + 1);
  inner_.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
  values_.assign(a.valuePtr(), a.valuePtr() + a.nonZeros());
  diag_.assign(n, -1);

  std::vector<int> position(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int p = outer_[i]; p < outer_[i + 1]; ++p) {
      position[inner_[p]] = p;
      if (inner_[p] == static_cast<int>(i)) diag_[i] = p;
    }
    if (diag_[i] < 0) throw FemError("ILU(0): missing diagonal in row " + std::to_string(i));

    for (int p = outer_[i]; p < outer_[i + 1] && inner_[p] < static_cast<int>(i); ++p) {
      const int k = inner_[p];
      const double pivot = values_[diag_[k]];
      if (pivot == 0.0) throw FemError("ILU(0): zero pivot in row " + std::to_string(k));
      values_[p] /= pivot;
      const double lik = values_[p];
      for (int q = diag_[k] + 1; q < outer_[k + 1]; ++q) {
        if (const int target = position[inner_[q]]; target >= 0) {
          values_[target] -= lik * values_[q];
        }
      }
    }

    for (int p = outer_[i]; p < outer_[i + 1]; ++p) position[inner_[p]] = -1;
  }
}

void Ilu0Preconditioner::apply(const Vector& in, Vector& out) const {
  const auto n = diag_.size();
  out.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double s = in[static_cast<Eigen::Index>(i)];
    for (int p = outer_[i]; p < diag_[i]; ++p) s -= values_[p] * out[inner_[p]];
    out[static_cast<Eigen::Index>(i)] = s;
  }
  for (std::size_t r = n; r-- > 0;) {
    double s = out[static_cast<Eigen::Index>(r)];
    for (int p = diag_[r] + 1; p < outer_[r + 1]; ++p) s -= values_[p] * out[inner_[p]];
    out[static_cast<Eigen::Index>(r)] = s / values_[diag_[r]];
  }
}

// --- BiCGStab ----------------------------------------------------------------

SolveStats bicgstab(const SparseMatrix& a, const Vector& b, Vector& x,
                    const Preconditioner& precond, double tol, int max_iter) {
  if (a.rows() != a.cols()) throw FemError("bicgstab: system matrix is not square");
  if (b.size() != a.rows()) throw FemError("bicgstab: right-hand side size mismatch");
  if (!(tol > 0.0)) throw FemError("bicgstab: tolerance must be positive");
  const auto n = a.rows();
  if (max_iter <= 0) max_iter = static_cast<int>(10 * n);
  if (x.size() != n) x = Vector::Zero(n);

  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero();
    return {0, 0.0};
  }
  const double target = tol * b_norm;

  Vector r = b - a * x;
  double r_norm = r.norm();
  if (r_norm <= target) return {0, r_norm / b_norm};

  Vector r_hat = r;
  Vector p = Vector::Zero(n), v = Vector::Zero(n);
  Vector p_pre(n), s(n), s_pre(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double breakdown = 1e-300;

  int it = 0;
  while (it < max_iter) {
    ++it;
    const double rho_next = r_hat.dot(r);
    if (std::abs(rho_next) < breakdown * r_hat.norm() * r.norm() ||
        std::abs(rho_next) < breakdown) {
      // Shadow residual became orthogonal; restart from the current residual.
      r_hat = r;
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
      continue;
    }
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p = r + beta * (p - omega * v);
    precond.apply(p, p_pre);
    v.noalias() = a * p_pre;
    const double rv = r_hat.dot(v);
    if (rv == 0.0 || !std::isfinite(rv)) {
      throw SolverError("bicgstab breakdown (r_hat . v = 0)", r_norm / b_norm, it);
    }
    alpha = rho / rv;
    s = r - alpha * v;
    if (s.norm() <= target) {
      x += alpha * p_pre;
      r = b - a * x;
      r_norm = r.norm();
      if (r_norm <= target) return {it, r_norm / b_norm};
      r_hat = r;
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
      continue;
    }
    precond.apply(s, s_pre);
    t.noalias() = a * s_pre;
    const double tt = t.squaredNorm();
    if (tt == 0.0) {
      throw SolverError("bicgstab breakdown (t = 0)", r_norm / b_norm, it);
    }
    omega = t.dot(s) / tt;
    x += alpha * p_pre + omega * s_pre;
    r = s - omega * t;
    r_norm = r.norm();
    if (!std::isfinite(r_norm)) {
      throw SolverError("bicgstab diverged (non-finite residual)", r_norm, it);
    }
    if (r_norm <= target) {
      // Guard against drift between the recursive and the true residual.
      r = b - a * x;
      r_norm = r.norm();
      if (r_norm <= target) return {it, r_norm / b_norm};
      r_hat = r;
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
    }
    if (omega == 0.0) {
      throw SolverError("bicgstab breakdown (omega = 0)", r_norm / b_norm, it);
    }
  }
  r_norm = (b - a * x).norm();
  throw SolverError("bicgstab did not converge in " + std::to_string(max_iter) +
                        " iterations (relative residual " + std::to_string(r_norm / b_norm) + ")",
                    r_norm / b_norm, it);
}

Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b, const SolverOptions& options,
                          SolveStats* stats) {
  Vector x = Vector::Zero(b.size());
  SolveStats result;
  switch (options.preconditioner) {
    case PreconditionerKind::none:
      result = bicgstab(a, b, x, IdentityPreconditioner{}, options.tol, options.max_iter);
      break;
    case PreconditionerKind::jacobi:
      result = bicgstab(a, b, x, JacobiPreconditioner(a), options.tol, options.max_iter);
      break;
    case PreconditionerKind::ilu0:
      result = bicgstab(a, b, x, Ilu0Preconditioner(a), options.tol, options.max_iter);
      break;
  }
  if (stats != nullptr) *stats = result;
  return x;
}

Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b, double tol, int max_iter) {
  SolverOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return solve_nonsymmetric(a, b, options);
}

void write_matrix_market(const SparseMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FemError("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace tmsim

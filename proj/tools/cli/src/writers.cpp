#include "tmsim/cli/writers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tmsim::cli {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json matrix(const Matrix2& m) {
  return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

}  // namespace

std::string vtk_polydata(const SurfaceMesh& mesh, const Vector& u, const Vector& v,
                         const std::string& title) {
  std::ostringstream out;
  out.precision(17);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  out << "POLYGONS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < u.size(); ++i) out << u[i] << '\n';
  out << "SCALARS v double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  return out.str();
}

void write_vtk(const std::filesystem::path& path, const SurfaceMesh& mesh, const State& state) {
  std::ostringstream title;
  title.precision(17);
  title << "tmsim t=" << state.t << " step=" << state.step << " V=" << state.V;
  write_text(path, vtk_polydata(mesh, state.u, state.v, title.str()));
}

std::string series_csv(const TimeSeries& series) {
  std::ostringstream out;
  out.precision(17);
  out << "t,step,int_u,int_v,V,heterogeneity,stationarity_residual,min_u,max_u,min_v,max_v,"
         "linear_iterations\n";
  for (const auto& r : series.rows) {
    out << r.t << ',' << r.step << ',' << r.int_u << ',' << r.int_v << ',' << r.V << ','
        << r.heterogeneity << ',' << r.residual << ',' << r.min_u << ',' << r.max_u << ','
        << r.min_v << ',' << r.max_v << ',' << r.linear_iterations << '\n';
  }
  return out.str();
}

std::string eigenvalues_csv(const Vector& values, double cluster_tol) {
  const auto clusters = cluster_eigenvalues(values, cluster_tol);
  std::ostringstream out;
  out.precision(17);
  out << "index,lambda,cluster\n";
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    while (c + 1 < clusters.size() && clusters[c + 1].first_index <= i) ++c;
    out << i << ',' << values[i] << ',' << c << '\n';
  }
  return out.str();
}

std::string clusters_csv(const Vector& values, double cluster_tol) {
  std::ostringstream out;
  out.precision(12);
  out << "cluster,mean,multiplicity,first_index\n";
  const auto clusters = cluster_eigenvalues(values, cluster_tol);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    out << c << ',' << clusters[c].mean << ',' << clusters[c].multiplicity << ','
        << clusters[c].first_index << '\n';
  }
  return out.str();
}

Json to_json(const Parameters& p) {
  return Json{{"a1", p.a1},         {"a2", p.a2}, {"a3", p.a3},        {"a4", p.a4},
              {"a5", p.a5},         {"a6", p.a6}, {"a_neg6", p.a_neg6}, {"d", p.d},
              {"gamma", p.gamma},   {"V0", p.V0}, {"c", p.c},           {"area", p.area},
              {"cG", p.cG()},       {"m", p.m()}};
}

Json to_json(const DimensionalParameters& dp) {
  return Json{{"k1", dp.k1},     {"k2", dp.k2},         {"k3", dp.k3},
              {"k4", dp.k4},     {"k5", dp.k5},         {"k_neg5", dp.k_neg5},
              {"b6", dp.b6},     {"b_neg6", dp.b_neg6}, {"g0bar", dp.g0bar},
              {"du", dp.du},     {"dv", dp.dv},         {"Dcyt", dp.Dcyt},
              {"cmax", dp.cmax}, {"R", dp.R},           {"vol_over_area", dp.vol_over_area},
              {"V_init", dp.V_init}, {"area", dp.area}};
}

Json to_json(const RunConfig& cfg) {
  Json j{{"dt", cfg.dt},
         {"t_end", cfg.t_end},
         {"linear_tol", cfg.linear_tol},
         {"stationarity_tol", cfg.stationarity_tol},
         {"snapshot_interval", cfg.snapshot_interval},
         {"seed", cfg.seed},
         {"stop_when_stationary", cfg.stop_when_stationary}};
  if (const auto* ic = std::get_if<RandomIC>(&cfg.ic)) {
    j["ic"] = Json{{"kind", "random"}, {"lo", ic->lo}, {"hi", ic->hi}};
  } else if (const auto* ic = std::get_if<ConstantIC>(&cfg.ic)) {
    j["ic"] = Json{{"kind", "constant"}, {"u0", ic->u0}, {"v0", ic->v0}};
  } else if (const auto* ic = std::get_if<SteadyStateNoiseIC>(&cfg.ic)) {
    j["ic"] = Json{{"kind", "steady_state_plus_noise"}, {"amplitude", ic->amplitude}};
  }
  switch (cfg.preconditioner) {
    case PreconditionerKind::ilu0: j["preconditioner"] = "ilu0"; break;
    case PreconditionerKind::jacobi: j["preconditioner"] = "jacobi"; break;
    case PreconditionerKind::none: j["preconditioner"] = "none"; break;
  }
  return j;
}

Json to_json(const SteadyState& ss) {
  return Json{{"u_star", ss.u_star},
              {"v_star", ss.v_star},
              {"V_star", ss.V_star},
              {"u0", ss.u0_bracket},
              {"u1", ss.u1_bracket},
              {"phi_sign_changes", ss.sign_changes},
              {"J0", matrix(ss.J0)},
              {"J1", matrix(ss.J1)}};
}

Json to_json(const ConditionRecord& r) {
  return Json{{"id", r.id},
              {"lhs", number(r.lhs)},
              {"relation", r.relation},
              {"rhs", number(r.rhs)},
              {"status", to_string(r.status)},
              {"satisfied", r.satisfied()}};
}

Json to_json(const std::vector<ConditionRecord>& records) {
  Json list = Json::array();
  for (const auto& r : records) list.push_back(to_json(r));
  return list;
}

Json to_json(const TuringReport& report) {
  const auto& b = report.band;
  Json band{{"tu3_value", b.tu3_value}, {"tu4_value", b.tu4_value}, {"tu3", b.tu3},
            {"tu4", b.tu4}};
  band["mu_minus"] = b.mu_minus ? Json(*b.mu_minus) : Json(nullptr);
  band["mu_plus"] = b.mu_plus ? Json(*b.mu_plus) : Json(nullptr);

  const auto& bd = report.bounds;
  Json j{{"parameters", to_json(report.parameters)},
         {"steady_state", to_json(report.steady_state)},
         {"conditions", to_json(report.conditions)},
         {"sufficient_d", number(report.sufficient_d)},
         {"homogeneous",
          {{"trace", report.homogeneous.trace},
           {"det", report.homogeneous.det},
           {"tu1", report.homogeneous.tu1},
           {"tu2", report.homogeneous.tu2},
           {"stable", report.homogeneous.stable()}}},
         {"band", band}};
  j["d_critical"] = report.d_critical ? Json(*report.d_critical) : Json(nullptr);
  if (!report.d_critical_note.empty()) j["d_critical_note"] = report.d_critical_note;
  j["bounds"] = Json{{"applicable", bd.applicable},   {"v_upper", bd.v_upper},
                     {"u_lower", bd.u_lower},         {"v_lower", bd.v_lower},
                     {"v_upper_holds", bd.v_upper_holds}, {"u_lower_holds", bd.u_lower_holds},
                     {"v_lower_holds", bd.v_lower_holds}};
  j["classification"] = to_string(report.classification);
  return j;
}

Json to_json(const PatternSummary& s) {
  return Json{{"classification", to_string(s.classification)},
              {"n_maxima", s.n_maxima},
              {"maxima", s.maxima},
              {"heterogeneity", s.heterogeneity},
              {"max_location", s.max_location},
              {"converged", s.converged}};
}

Json mesh_descriptor(const MeshSpec& spec, const SurfaceMesh& mesh) {
  Json j;
  if (spec.file.empty()) {
    j["kind"] = "icosphere";
    j["level"] = spec.level;
  } else {
    j["kind"] = "off";
    j["file"] = spec.file;
  }
  j["radius"] = spec.radius;
  j["vertices"] = mesh.num_vertices();
  j["triangles"] = mesh.num_triangles();
  j["area"] = surface_area(mesh);
  j["volume"] = enclosed_volume(mesh);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace tmsim::cli

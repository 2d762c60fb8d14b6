#include "tmsim/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "tmsim/analysis.hpp"
#include "tmsim/cli/writers.hpp"
#include "tmsim/fem.hpp"
#include "tmsim/simulator.hpp"
#include "tmsim/stability.hpp"

namespace tmsim::cli {

namespace {

Config merged_config(const CommandLine& cmd) {
  Config config;
  if (cmd.preset) config = Config::load(find_preset(*cmd.preset));
  if (cmd.config) {
    const Config user = Config::load(*cmd.config);
    for (const auto& [section, entries] : user.sections()) {
      for (const auto& [key, value] : entries) config.set(section, key, value);
    }
  }
  if (cmd.seed) config.set("run", "seed", std::to_string(*cmd.seed));
  if (cmd.mesh_level) config.set("mesh", "level", std::to_string(*cmd.mesh_level));
  if (cmd.dt) config.set("run", "dt", format_double(*cmd.dt));
  if (cmd.t_end) config.set("run", "t_end", format_double(*cmd.t_end));
  if (cmd.out) config.set("output", "dir", *cmd.out);
  if (cmd.k) config.set("analysis", "eigenpairs", std::to_string(*cmd.k));
  return config;
}

Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"error", {{"kind", kind}, {"message", message}}}};
}

std::string steady_state_kind(SteadyStateError::Kind kind) {
  switch (kind) {
    case SteadyStateError::Kind::precondition: return "precondition";
    case SteadyStateError::Kind::bracket: return "bracket";
    case SteadyStateError::Kind::no_root: return "no_root";
  }
  return "unknown";
}

Json mesh_modes(const JobConfig& job, const TuringReport& report) {
  const SurfaceMesh mesh = build_mesh(job.mesh);
  const FemOperators ops = FemOperators::assemble(mesh);
  const int k =
      std::min<int>(job.analysis.eigenpairs, static_cast<int>(mesh.num_vertices()) - 1);
  EigenOptions options;
  options.tol = 1e-8;
  const auto pairs = laplace_beltrami_eigs(ops.mass, ops.stiffness, k, options);
  const std::vector<double> values(pairs.values.data(), pairs.values.data() + pairs.values.size());
  const auto modes = unstable_modes(report.parameters, report.steady_state, report.parameters.d,
                                    values);
  Json list = Json::array();
  for (const auto& m : modes) {
    list.push_back({{"index", m.index}, {"lambda", m.lambda}, {"growth_rate", m.growth_rate}});
  }
  const double largest = values.back();
  const bool truncated = report.band.mu_plus && *report.band.mu_plus > largest;
  return Json{{"mesh", mesh_descriptor(job.mesh, mesh)},
              {"eigenpairs", k},
              {"largest_lambda", largest},
              {"band_truncated", truncated},
              {"unstable", list}};
}

}  // namespace

JobConfig load_job(const CommandLine& cmd) {
  JobConfig job = resolve(merged_config(cmd));
  if (cmd.preset) job.preset = *cmd.preset;
  return job;
}

SurfaceMesh build_mesh(const MeshSpec& spec) {
  SurfaceMesh mesh = spec.file.empty() ? icosphere(spec.level) : load_off(spec.file);
  return spec.radius == 1.0 ? mesh : mesh.scaled(spec.radius);
}

int cmd_analyze(const JobConfig& job, bool write_files, std::ostream& out, std::ostream& err) {
  Json result;
  int code = kSuccess;
  try {
    const TuringReport report = analyze(job.parameters);
    result = to_json(report);
    result["mesh_modes"] = mesh_modes(job, report);
  } catch (const SteadyStateError& e) {
    result = error_json(steady_state_kind(e.kind()), e.what());
    result["error"]["left_value"] = e.left_value();
    result["error"]["right_value"] = e.right_value();
    result["parameters"] = to_json(job.parameters);
    result["conditions"] = to_json(check_conditions(job.parameters));
    err << "analyze: no steady state: " << e.what() << '\n';
    code = kPreconditionFailure;
  }
  const std::string text = result.dump(2) + "\n";
  out << text;
  if (write_files) write_text(std::filesystem::path(job.output.dir) / "report.json", text);
  return code;
}

int cmd_simulate(const JobConfig& job, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  const fs::path dir(job.output.dir);
  fs::create_directories(dir);

  const SurfaceMesh mesh = build_mesh(job.mesh);
  const FemOperators ops = FemOperators::assemble(mesh);

  Json manifest{{"tool", "tmsim"},
                {"version", TMSIM_VERSION},
                {"command", "simulate"},
                {"preset", job.preset.empty() ? Json(nullptr) : Json(job.preset)},
                {"seed", job.run.seed},
                {"mesh", mesh_descriptor(job.mesh, mesh)},
                {"parameters", to_json(job.parameters)},
                {"run", to_json(job.run)},
                {"status", "running"}};
  if (job.dimensional) manifest["dimensional"] = to_json(*job.dimensional);
  write_text(dir / "config.toml", to_config(job).to_string());

  Json outputs{{"config", "config.toml"}, {"series", "series.csv"}, {"summary", "summary.json"}};
  Json snapshots = Json::array();
  int snapshot_index = 0;
  const SnapshotCallback on_snapshot = [&](const State& s) {
    if (!job.output.vtk) return;
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/state_%04d.vtk", snapshot_index++);
    write_vtk(dir / name, mesh, s);
    snapshots.push_back({{"file", name}, {"t", s.t}, {"step", s.step}});
  };
  outputs["snapshots"] = Json::array();
  manifest["outputs"] = outputs;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  const RunResult result = run(mesh, ops, job.parameters, job.run, on_snapshot);
  write_text(dir / "series.csv", series_csv(result.series));

  ClassifyThresholds thresholds;
  thresholds.heterogeneity = job.analysis.heterogeneity_threshold;
  thresholds.prominence = job.analysis.prominence;
  const PatternSummary summary = classify(result, mesh, ops.mass, thresholds);
  const auto& last = result.series.rows.back();
  Json summary_json{{"pattern", to_json(summary)},
                    {"final",
                     {{"t", result.final_state.t},
                      {"step", result.final_state.step},
                      {"V", result.final_state.V},
                      {"int_u", last.int_u},
                      {"int_v", last.int_v},
                      {"stationarity_residual", last.residual},
                      {"max_u", last.max_u},
                      {"min_u", last.min_u}}},
                    {"converged", result.converged},
                    {"failed", result.failed},
                    {"conservation_deviation", conservation_check(result.series)},
                    {"warnings", result.warnings}};
  if (result.failed) summary_json["failure"] = result.failure;
  write_text(dir / "summary.json", summary_json.dump(2) + "\n");

  outputs["snapshots"] = snapshots;
  manifest["outputs"] = outputs;
  manifest["status"] = result.failed ? "failed" : "completed";
  manifest["converged"] = result.converged;
  if (result.failed) manifest["failure"] = result.failure;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  out << "t = " << result.final_state.t << "  steps = " << result.final_state.step
      << "  converged = " << (result.converged ? "yes" : "no")
      << "  classification = " << to_string(summary.classification)
      << "  maxima = " << summary.n_maxima << "  heterogeneity = " << summary.heterogeneity
      << '\n';
  if (result.failed) {
    err << "simulate: " << result.failure << '\n';
    return kNumericalFailure;
  }
  return kSuccess;
}

int cmd_nondim(const Config& config, std::ostream& out, std::ostream& err) {
  if (!config.has_section("dimensional")) {
    err << "nondim: the config has no [dimensional] section\n";
    return kConfigError;
  }
  const auto missing = missing_dimensional_keys(config);
  if (!missing.empty()) {
    std::string list;
    for (const auto& key : missing) list += (list.empty() ? "" : ", ") + key;
    err << "nondim: [dimensional] is missing: " << list << '\n';
    Json j = error_json("missing_keys", "[dimensional] is missing: " + list);
    j["missing"] = missing;
    out << j.dump(2) << '\n';
    return kConfigError;
  }
  const DimensionalParameters dp = read_dimensional(config);
  const Parameters p = nondimensionalize(dp);
  Json j{{"dimensional", to_json(dp)}, {"parameters", to_json(p)}};
  j["conditions"] = to_json(check_conditions(p));
  try {
    const TuringReport report = analyze(p);
    j["steady_state"] = to_json(report.steady_state);
    j["classification"] = to_string(report.classification);
    j["d_critical"] = report.d_critical ? Json(*report.d_critical) : Json(nullptr);
  } catch (const SteadyStateError& e) {
    j["steady_state"] = nullptr;
    j["steady_state_error"] = e.what();
  }
  out << j.dump(2) << '\n';
  return kSuccess;
}

int cmd_eigs(const JobConfig& job, bool write_files, std::ostream& out, std::ostream&) {
  const SurfaceMesh mesh = build_mesh(job.mesh);
  const FemOperators ops = FemOperators::assemble(mesh);
  const int k = job.analysis.eigenpairs;
  const auto pairs = laplace_beltrami_eigs(ops.mass, ops.stiffness, k);
  const std::string clusters = clusters_csv(pairs.values, job.analysis.cluster_tol);
  out << clusters;
  if (write_files) {
    const std::filesystem::path dir(job.output.dir);
    write_text(dir / "eigenvalues.csv", eigenvalues_csv(pairs.values, job.analysis.cluster_tol));
    write_text(dir / "clusters.csv", clusters);
  }
  return kSuccess;
}

int run_command(const CommandLine& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.command == "nondim") {
      Config config;
      if (cmd.preset) config = Config::load(find_preset(*cmd.preset));
      if (cmd.config) {
        const Config user = Config::load(*cmd.config);
        for (const auto& [section, entries] : user.sections()) {
          for (const auto& [key, value] : entries) config.set(section, key, value);
        }
      }
      return cmd_nondim(config, out, err);
    }
    const JobConfig job = load_job(cmd);
    const bool write_files = cmd.out.has_value();
    if (cmd.command == "analyze") return cmd_analyze(job, write_files, out, err);
    if (cmd.command == "simulate") return cmd_simulate(job, out, err);
    if (cmd.command == "eigs") return cmd_eigs(job, write_files, out, err);
    err << "unknown command '" << cmd.command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const MeshError& e) {
    err << "mesh error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SteadyStateError& e) {
    err << "steady state: " << e.what() << '\n';
    return kPreconditionFailure;
  } catch (const SimulationError& e) {
    err << "simulation failed: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const SolverError& e) {
    err << "solver failed: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const EigenSolverError& e) {
    err << "eigensolver failed: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace tmsim::cli

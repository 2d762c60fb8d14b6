#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tmsim/analysis.hpp"
#include "tmsim/cli/config.hpp"
#include "tmsim/fem.hpp"
#include "tmsim/mesh.hpp"
#include "tmsim/simulator.hpp"
#include "tmsim/stability.hpp"

namespace tmsim::cli {

using Json = nlohmann::ordered_json;

/// Legacy ASCII POLYDATA with u and v as point scalars.
std::string vtk_polydata(const SurfaceMesh& mesh, const Vector& u, const Vector& v,
                         const std::string& title);
void write_vtk(const std::filesystem::path& path, const SurfaceMesh& mesh, const State& state);

std::string series_csv(const TimeSeries& series);
std::string eigenvalues_csv(const Vector& values, double cluster_tol);
std::string clusters_csv(const Vector& values, double cluster_tol);

Json to_json(const Parameters& p);
Json to_json(const DimensionalParameters& dp);
Json to_json(const RunConfig& cfg);
Json to_json(const SteadyState& ss);
Json to_json(const ConditionRecord& record);
Json to_json(const std::vector<ConditionRecord>& records);
Json to_json(const TuringReport& report);
Json to_json(const PatternSummary& summary);
Json mesh_descriptor(const MeshSpec& spec, const SurfaceMesh& mesh);

/// Writes `contents` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace tmsim::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "tmsim/cli/config.hpp"

namespace tmsim::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
  kPreconditionFailure = 4,
};

struct CommandLine {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> mesh_level;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<int> k;
};

/// Loads the preset and/or config file and applies command-line overrides.
/// A config file given together with a preset overrides the preset's keys.
JobConfig load_job(const CommandLine& cmd);

SurfaceMesh build_mesh(const MeshSpec& spec);

int cmd_analyze(const JobConfig& job, bool write_files, std::ostream& out, std::ostream& err);
int cmd_simulate(const JobConfig& job, std::ostream& out, std::ostream& err);
int cmd_nondim(const Config& config, std::ostream& out, std::ostream& err);
int cmd_eigs(const JobConfig& job, bool write_files, std::ostream& out, std::ostream& err);

/// Dispatches on cmd.command and maps exceptions to exit codes.
int run_command(const CommandLine& cmd, std::ostream& out, std::ostream& err);

}  // namespace tmsim::cli

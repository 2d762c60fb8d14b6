#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmsim/kinetics.hpp"
#include "tmsim/simulator.hpp"

namespace tmsim::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `[section]` / `key = value` document. Values keep their source text
/// with surrounding quotes removed.
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  const Section* section(const std::string& name) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::map<std::string, Section>& sections() const { return sections_; }

  /// Canonical text: sections and keys in sorted order.
  std::string to_string() const;

 private:
  std::map<std::string, Section> sections_;
};

struct MeshSpec {
  int level = 4;
  std::string file;  ///< OFF mesh; overrides level when set
  double radius = 1.0;
};

struct OutputSpec {
  std::string dir = "out";
  bool vtk = true;
};

struct AnalysisSpec {
  int eigenpairs = 200;
  double prominence = 0.5;
  double heterogeneity_threshold = 1e-3;
  double cluster_tol = 1e-2;
};

/// Every setting of one job with defaults filled in.
struct JobConfig {
  Parameters parameters;
  std::optional<DimensionalParameters> dimensional;
  MeshSpec mesh;
  RunConfig run;
  OutputSpec output;
  AnalysisSpec analysis;
  std::string preset;
};

/// Builds a JobConfig. Unknown sections or keys and malformed values throw
/// ConfigError. A [dimensional] section is converted and then overridden by
/// any keys given in [parameters].
JobConfig resolve(const Config& config);

/// Dimensional keys absent from the section, in declaration order.
std::vector<std::string> missing_dimensional_keys(const Config& config);

DimensionalParameters read_dimensional(const Config& config);

/// Directories searched for `<name>.toml`: $TMSIM_PRESETS, the source tree
/// presets directory, ./presets.
std::filesystem::path find_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Writes back a fully resolved job so that parsing it gives the same job.
Config to_config(const JobConfig& job);

std::string format_double(double x);

}  // namespace tmsim::cli

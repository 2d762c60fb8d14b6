#include "tmsim/cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace tmsim::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"parameters", {"a1", "a2", "a3", "a4", "a5", "a6", "a_neg6", "d", "gamma", "V0", "c", "area"}},
      {"dimensional",
       {"k1", "k2", "k3", "k4", "k5", "k_neg5", "b6", "b_neg6", "g0bar", "du", "dv", "Dcyt",
        "cmax", "R", "vol_over_area", "V_init", "area"}},
      {"mesh", {"level", "file", "radius"}},
      {"run",
       {"dt", "t_end", "linear_tol", "stationarity_tol", "snapshot_interval", "seed", "ic",
        "ic_lo", "ic_hi", "ic_u0", "ic_v0", "ic_amplitude", "preconditioner",
        "stop_when_stationary"}},
      {"output", {"dir", "vtk"}},
      {"analysis", {"eigenpairs", "prominence", "heterogeneity_threshold", "cluster_tol"}},
  };
  return keys;
}

constexpr std::array<const char*, 15> kRequiredDimensional = {
    "k1", "k2", "k3", "k4", "k5", "k_neg5", "b6", "b_neg6",
    "g0bar", "du", "dv", "Dcyt", "cmax", "R", "V_init"};

double to_double(const std::string& section, const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + text + "'");
  }
  return value;
}

long to_integer(const std::string& section, const std::string& key, const std::string& text) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + text + "'");
  }
  return value;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("[" + section + "] " + key + ": expected true or false, got '" + text + "'");
}

class Reader {
 public:
  Reader(const Config& config, std::string section) : config_(config), section_(std::move(section)) {}

  void number(const std::string& key, double& target) const {
    if (auto v = config_.get(section_, key)) target = to_double(section_, key, *v);
  }
  template <typename Int>
  void integer(const std::string& key, Int& target) const {
    if (auto v = config_.get(section_, key)) target = static_cast<Int>(to_integer(section_, key, *v));
  }
  void boolean(const std::string& key, bool& target) const {
    if (auto v = config_.get(section_, key)) target = to_bool(section_, key, *v);
  }
  void text(const std::string& key, std::string& target) const {
    if (auto v = config_.get(section_, key)) target = *v;
  }

 private:
  const Config& config_;
  std::string section_;
};

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), x);
  if (ec != std::errc()) return std::to_string(x);
  return std::string(buffer.data(), ptr);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config config;
  std::istringstream in(text);
  std::string raw;
  std::string current;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!known_keys().contains(current)) {
        throw ConfigError(where + "unknown section [" + current + "]");
      }
      config.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (current.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!known_keys().at(current).contains(key)) {
      throw ConfigError(where + "unknown key '" + key + "' in [" + current + "]");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (!value.empty() && (value.front() == '"' || value.back() == '"')) {
      throw ConfigError(where + "unbalanced quotes");
    }
    auto& section = config.sections_[current];
    if (section.contains(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    section[key] = value;
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

bool Config::has_section(const std::string& section) const { return sections_.contains(section); }

const Config::Section* Config::section(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto* s = this->section(section);
  if (s == nullptr) return std::nullopt;
  const auto it = s->find(key);
  if (it == s->end()) return std::nullopt;
  return it->second;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!known_keys().contains(section) || !known_keys().at(section).contains(key)) {
    throw ConfigError("unknown setting [" + section + "] " + key);
  }
  sections_[section][key] = value;
}

std::string Config::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [key, value] : entries) {
      const bool needs_quotes = key == "file" || key == "dir" || key == "ic" || key == "preconditioner";
      out << key << " = " << (needs_quotes ? "\"" + value + "\"" : value) << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> missing_dimensional_keys(const Config& config) {
  std::vector<std::string> missing;
  for (const char* key : kRequiredDimensional) {
    if (!config.get("dimensional", key)) missing.emplace_back(key);
  }
  return missing;
}

DimensionalParameters read_dimensional(const Config& config) {
  const auto missing = missing_dimensional_keys(config);
  if (!missing.empty()) {
    std::string list;
    for (const auto& key : missing) list += (list.empty() ? "" : ", ") + key;
    throw ConfigError("[dimensional] is missing: " + list);
  }
  DimensionalParameters dp;
  const Reader r(config, "dimensional");
  r.number("k1", dp.k1);
  r.number("k2", dp.k2);
  r.number("k3", dp.k3);
  r.number("k4", dp.k4);
  r.number("k5", dp.k5);
  r.number("k_neg5", dp.k_neg5);
  r.number("b6", dp.b6);
  r.number("b_neg6", dp.b_neg6);
  r.number("g0bar", dp.g0bar);
  r.number("du", dp.du);
  r.number("dv", dp.dv);
  r.number("Dcyt", dp.Dcyt);
  r.number("cmax", dp.cmax);
  r.number("R", dp.R);
  r.number("vol_over_area", dp.vol_over_area);
  r.number("V_init", dp.V_init);
  r.number("area", dp.area);
  try {
    dp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[dimensional] ") + e.what());
  }
  return dp;
}

JobConfig resolve(const Config& config) {
  JobConfig job;
  if (config.has_section("dimensional")) {
    job.dimensional = read_dimensional(config);
    job.parameters = nondimensionalize(*job.dimensional);
  }
  {
    const Reader r(config, "parameters");
    auto& p = job.parameters;
    r.number("a1", p.a1);
    r.number("a2", p.a2);
    r.number("a3", p.a3);
    r.number("a4", p.a4);
    r.number("a5", p.a5);
    r.number("a6", p.a6);
    r.number("a_neg6", p.a_neg6);
    r.number("d", p.d);
    r.number("gamma", p.gamma);
    r.number("V0", p.V0);
    r.number("c", p.c);
    r.number("area", p.area);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[parameters] ") + e.what());
    }
  }
  {
    const Reader r(config, "mesh");
    r.integer("level", job.mesh.level);
    r.text("file", job.mesh.file);
    r.number("radius", job.mesh.radius);
    if (job.mesh.file.empty() && (job.mesh.level < 0 || job.mesh.level > kMaxIcosphereLevel)) {
      throw ConfigError("[mesh] level must be in 0.." + std::to_string(kMaxIcosphereLevel));
    }
    if (!(job.mesh.radius > 0.0)) throw ConfigError("[mesh] radius must be positive");
  }
  {
    const Reader r(config, "run");
    auto& run = job.run;
    r.number("dt", run.dt);
    r.number("t_end", run.t_end);
    r.number("linear_tol", run.linear_tol);
    r.number("stationarity_tol", run.stationarity_tol);
    r.number("snapshot_interval", run.snapshot_interval);
    r.integer("seed", run.seed);
    r.boolean("stop_when_stationary", run.stop_when_stationary);
    std::string ic = "random";
    r.text("ic", ic);
    if (ic == "random") {
      RandomIC value;
      r.number("ic_lo", value.lo);
      r.number("ic_hi", value.hi);
      run.ic = value;
    } else if (ic == "constant") {
      ConstantIC value;
      r.number("ic_u0", value.u0);
      r.number("ic_v0", value.v0);
      run.ic = value;
    } else if (ic == "steady_state_plus_noise") {
      SteadyStateNoiseIC value;
      r.number("ic_amplitude", value.amplitude);
      run.ic = value;
    } else {
      throw ConfigError("[run] ic must be random, constant or steady_state_plus_noise");
    }
    std::string precond = "ilu0";
    r.text("preconditioner", precond);
    if (precond == "ilu0") {
      run.preconditioner = PreconditionerKind::ilu0;
    } else if (precond == "jacobi") {
      run.preconditioner = PreconditionerKind::jacobi;
    } else if (precond == "none") {
      run.preconditioner = PreconditionerKind::none;
    } else {
      throw ConfigError("[run] preconditioner must be ilu0, jacobi or none");
    }
    try {
      run.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[run] ") + e.what());
    }
  }
  {
    const Reader r(config, "output");
    r.text("dir", job.output.dir);
    r.boolean("vtk", job.output.vtk);
  }
  {
    const Reader r(config, "analysis");
    r.integer("eigenpairs", job.analysis.eigenpairs);
    r.number("prominence", job.analysis.prominence);
    r.number("heterogeneity_threshold", job.analysis.heterogeneity_threshold);
    r.number("cluster_tol", job.analysis.cluster_tol);
    if (job.analysis.eigenpairs < 1) throw ConfigError("[analysis] eigenpairs must be >= 1");
    if (!(job.analysis.prominence >= 0.0)) throw ConfigError("[analysis] prominence must be >= 0");
  }
  return job;
}

Config to_config(const JobConfig& job) {
  Config c;
  const auto& p = job.parameters;
  const auto num = [](double x) { return format_double(x); };
  c.set("parameters", "a1", num(p.a1));
  c.set("parameters", "a2", num(p.a2));
  c.set("parameters", "a3", num(p.a3));
  c.set("parameters", "a4", num(p.a4));
  c.set("parameters", "a5", num(p.a5));
  c.set("parameters", "a6", num(p.a6));
  c.set("parameters", "a_neg6", num(p.a_neg6));
  c.set("parameters", "d", num(p.d));
  c.set("parameters", "gamma", num(p.gamma));
  c.set("parameters", "V0", num(p.V0));
  c.set("parameters", "c", num(p.c));
  c.set("parameters", "area", num(p.area));
  if (job.dimensional) {
    const auto& dp = *job.dimensional;
    c.set("dimensional", "k1", num(dp.k1));
    c.set("dimensional", "k2", num(dp.k2));
    c.set("dimensional", "k3", num(dp.k3));
    c.set("dimensional", "k4", num(dp.k4));
    c.set("dimensional", "k5", num(dp.k5));
    c.set("dimensional", "k_neg5", num(dp.k_neg5));
    c.set("dimensional", "b6", num(dp.b6));
    c.set("dimensional", "b_neg6", num(dp.b_neg6));
    c.set("dimensional", "g0bar", num(dp.g0bar));
    c.set("dimensional", "du", num(dp.du));
    c.set("dimensional", "dv", num(dp.dv));
    c.set("dimensional", "Dcyt", num(dp.Dcyt));
    c.set("dimensional", "cmax", num(dp.cmax));
    c.set("dimensional", "R", num(dp.R));
    c.set("dimensional", "vol_over_area", num(dp.vol_over_area));
    c.set("dimensional", "V_init", num(dp.V_init));
    c.set("dimensional", "area", num(dp.area));
  }
  if (job.mesh.file.empty()) {
    c.set("mesh", "level", std::to_string(job.mesh.level));
  } else {
    c.set("mesh", "file", job.mesh.file);
  }
  c.set("mesh", "radius", num(job.mesh.radius));

  const auto& run = job.run;
  c.set("run", "dt", num(run.dt));
  c.set("run", "t_end", num(run.t_end));
  c.set("run", "linear_tol", num(run.linear_tol));
  c.set("run", "stationarity_tol", num(run.stationarity_tol));
  c.set("run", "snapshot_interval", num(run.snapshot_interval));
  c.set("run", "seed", std::to_string(run.seed));
  c.set("run", "stop_when_stationary", run.stop_when_stationary ? "true" : "false");
  if (const auto* ic = std::get_if<RandomIC>(&run.ic)) {
    c.set("run", "ic", "random");
    c.set("run", "ic_lo", num(ic->lo));
    c.set("run", "ic_hi", num(ic->hi));
  } else if (const auto* ic = std::get_if<ConstantIC>(&run.ic)) {
    c.set("run", "ic", "constant");
    c.set("run", "ic_u0", num(ic->u0));
    c.set("run", "ic_v0", num(ic->v0));
  } else if (const auto* ic = std::get_if<SteadyStateNoiseIC>(&run.ic)) {
    c.set("run", "ic", "steady_state_plus_noise");
    c.set("run", "ic_amplitude", num(ic->amplitude));
  }
  switch (run.preconditioner) {
    case PreconditionerKind::ilu0: c.set("run", "preconditioner", "ilu0"); break;
    case PreconditionerKind::jacobi: c.set("run", "preconditioner", "jacobi"); break;
    case PreconditionerKind::none: c.set("run", "preconditioner", "none"); break;
  }
  c.set("output", "dir", job.output.dir);
  c.set("output", "vtk", job.output.vtk ? "true" : "false");
  c.set("analysis", "eigenpairs", std::to_string(job.analysis.eigenpairs));
  c.set("analysis", "prominence", num(job.analysis.prominence));
  c.set("analysis", "heterogeneity_threshold", num(job.analysis.heterogeneity_threshold));
  c.set("analysis", "cluster_tol", num(job.analysis.cluster_tol));
  return c;
}

std::filesystem::path find_preset(const std::string& name) {
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("TMSIM_PRESETS")) dirs.emplace_back(env);
  dirs.emplace_back(TMSIM_PRESET_DIR);
  dirs.emplace_back("presets");
  for (const auto& dir : dirs) {
    const auto path = dir / (name + ".toml");
    if (std::filesystem::is_regular_file(path)) return path;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  std::set<std::string> names;
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("TMSIM_PRESETS")) dirs.emplace_back(env);
  dirs.emplace_back(TMSIM_PRESET_DIR);
  for (const auto& dir : dirs) {
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      if (entry.path().extension() == ".toml") names.insert(entry.path().stem().string());
    }
  }
  return {names.begin(), names.end()};
}

}  // namespace tmsim::cli

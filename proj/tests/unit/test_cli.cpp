#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tmsim/cli/commands.hpp"
#include "tmsim/cli/config.hpp"
#include "tmsim/cli/writers.hpp"

using namespace tmsim;
using namespace tmsim::cli;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tmsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Captured {
  int code;
  std::string out;
  std::string err;
};

Captured run(const CommandLine& cmd) {
  std::ostringstream out, err;
  const int code = run_command(cmd, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  const Config c = Config::parse(
      "# comment\n[parameters]\na2 = 40  # trailing\n\n[output]\ndir = \"out/x\"\n");
  EXPECT_EQ(c.get("parameters", "a2"), "40");
  EXPECT_EQ(c.get("output", "dir"), "out/x");
  EXPECT_FALSE(c.get("parameters", "a3").has_value());
  EXPECT_TRUE(c.has_section("output"));

  const Config again = Config::parse(c.to_string());
  EXPECT_EQ(again.to_string(), c.to_string());
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(resolve(Config::parse("[nonsense]\nx = 1\n")), ConfigError);
  EXPECT_THROW(resolve(Config::parse("[parameters]\nbogus = 1\n")), ConfigError);
  EXPECT_THROW(resolve(Config::parse("[parameters]\na2 = twenty\n")), ConfigError);
  EXPECT_THROW(resolve(Config::parse("[run]\nic = \"sometimes\"\n")), ConfigError);
  EXPECT_THROW(Config::parse("[parameters\na2 = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("a2 1\n"), ConfigError);
}

TEST(Config, ResolveFillsDefaultsAndOverrides) {
  const JobConfig job = resolve(Config::parse(
      "[parameters]\nd = 105\n[run]\nic = \"constant\"\nic_u0 = 0.5\nic_v0 = 0.1\n"
      "preconditioner = \"jacobi\"\n[mesh]\nlevel = 3\n"));
  EXPECT_EQ(job.parameters.d, 105.0);
  EXPECT_EQ(job.parameters.a2, 20.0);
  EXPECT_EQ(job.mesh.level, 3);
  ASSERT_TRUE(std::holds_alternative<ConstantIC>(job.run.ic));
  EXPECT_EQ(std::get<ConstantIC>(job.run.ic).u0, 0.5);
  EXPECT_EQ(job.run.preconditioner, PreconditionerKind::jacobi);

  // Writing a job back and resolving it again is lossless.
  const JobConfig back = resolve(to_config(job));
  EXPECT_EQ(to_config(back).to_string(), to_config(job).to_string());
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 4.894264108e10, 2.5e-15, 400.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Presets, AllResolve) {
  const auto names = preset_names();
  EXPECT_GE(names.size(), 8u);
  for (const auto& name : names) {
    EXPECT_NO_THROW(resolve(Config::load(find_preset(name)))) << name;
  }
  const JobConfig baseline = resolve(Config::load(find_preset("fig2")));
  EXPECT_EQ(baseline.parameters.a3, 160.0);
  EXPECT_EQ(baseline.parameters.d, 1000.0);
  EXPECT_EQ(baseline.mesh.level, 4);
  EXPECT_THROW(find_preset("no-such-preset"), ConfigError);

  const JobConfig cdc42 = resolve(Config::load(find_preset("cdc42")));
  ASSERT_TRUE(cdc42.dimensional.has_value());
  EXPECT_NEAR(cdc42.parameters.d, 1.0, 1e-12);
  EXPECT_NEAR(cdc42.parameters.gamma, 1e-12, 1e-24);
}

TEST(Presets, MissingDimensionalKeysAreNamed) {
  const Config c = Config::parse("[dimensional]\nk1 = 1\nk2 = 1\n");
  const auto missing = missing_dimensional_keys(c);
  EXPECT_NE(std::find(missing.begin(), missing.end(), "k3"), missing.end());
  EXPECT_EQ(std::find(missing.begin(), missing.end(), "k1"), missing.end());
}

TEST(Writers, VtkAndCsvLayouts) {
  const SurfaceMesh mesh = icosphere(1);
  const Vector u = Vector::Constant(42, 0.5), v = Vector::Constant(42, 0.25);
  const std::string vtk = vtk_polydata(mesh, u, v, "test");
  EXPECT_EQ(vtk.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(vtk.find("POINTS 42 double"), std::string::npos);
  EXPECT_NE(vtk.find("POLYGONS 80 320"), std::string::npos);
  EXPECT_NE(vtk.find("POINT_DATA 42"), std::string::npos);
  EXPECT_NE(vtk.find("SCALARS u double"), std::string::npos);
  EXPECT_NE(vtk.find("SCALARS v double"), std::string::npos);

  TimeSeries series;
  series.rows.resize(3);
  const std::string csv = series_csv(series);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,step,int_u,int_v,V,heterogeneity,stationarity_residual,min_u,max_u,min_v,max_v,"
            "linear_iterations");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  Vector values(5);
  values << 0.0, 2.0, 2.0, 2.0, 6.0;
  const std::string clusters = clusters_csv(values, 1e-2);
  EXPECT_EQ(std::count(clusters.begin(), clusters.end(), '\n'), 4);
}

TEST(Writers, ConditionJsonCarriesBothSides) {
  const Json j = to_json(check_conditions(Parameters::baseline()));
  ASSERT_EQ(j.size(), 10u);
  EXPECT_EQ(j[1]["id"], "cdt:2");
  EXPECT_EQ(j[1]["lhs"], 80.0);
  EXPECT_EQ(j[1]["rhs"], 80.0);
  EXPECT_EQ(j[1]["status"], "equality");
  EXPECT_EQ(j[5]["status"], "violated");
}

TEST(Commands, AnalyzeBaseline) {
  JobConfig job;
  job.mesh.level = 3;
  job.analysis.eigenpairs = 100;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_analyze(job, false, out, err), kSuccess) << err.str();
  const Json doc = Json::parse(out.str());
  EXPECT_EQ(doc["classification"], "turing_unstable");
  EXPECT_NEAR(doc["d_critical"].get<double>(), 100.99693, 1e-4);
  EXPECT_TRUE(doc.contains("mesh_modes"));
}

TEST(Commands, ExitCodes) {
  const auto dir = scratch_dir("codes");

  CommandLine missing_preset{.command = "analyze", .preset = "does-not-exist"};
  EXPECT_EQ(run(missing_preset).code, kConfigError);

  CommandLine bad_key{.command = "analyze",
                      .config = write_file(dir / "bad.toml", "[parameters]\nzz = 1\n")};
  EXPECT_EQ(run(bad_key).code, kConfigError);

  CommandLine no_state{.command = "analyze",
                       .config = write_file(dir / "a2.toml", "[parameters]\na2 = 0.4\n")};
  const Captured c = run(no_state);
  EXPECT_EQ(c.code, kPreconditionFailure);
  EXPECT_NE(c.out.find("cdt:1"), std::string::npos);

  CommandLine partial{.command = "nondim",
                      .config = write_file(dir / "dim.toml", "[dimensional]\nk1 = 1\n")};
  const Captured d = run(partial);
  EXPECT_EQ(d.code, kConfigError);
  EXPECT_NE(d.err.find("k3"), std::string::npos);

  CommandLine nondim{.command = "nondim", .preset = "cdc42"};
  const Captured e = run(nondim);
  EXPECT_EQ(e.code, kSuccess) << e.err;
  EXPECT_TRUE(Json::parse(e.out).contains("parameters"));

  CommandLine unknown{.command = "frobnicate"};
  EXPECT_EQ(run(unknown).code, kConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Commands, SimulateWritesOutputs) {
  const auto dir = scratch_dir("simulate");
  const auto config = write_file(dir / "job.toml",
                                 "[parameters]\ngamma = 20\n"
                                 "[mesh]\nlevel = 2\n"
                                 "[run]\ndt = 0.01\nt_end = 0.2\nsnapshot_interval = 0.1\n"
                                 "stop_when_stationary = false\n");
  CommandLine cmd{.command = "simulate", .config = config, .out = (dir / "out").string()};
  const Captured c = run(cmd);
  ASSERT_EQ(c.code, kSuccess) << c.err;
  const auto out = dir / "out";
  EXPECT_TRUE(std::filesystem::exists(out / "config.toml"));
  EXPECT_TRUE(std::filesystem::exists(out / "series.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "snapshots" / "state_0000.vtk"));
  EXPECT_TRUE(std::filesystem::exists(out / "snapshots" / "state_0002.vtk"));
  const Json manifest = Json::parse(read_file(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "completed");
  EXPECT_EQ(manifest["outputs"]["snapshots"].size(), 3u);
  const Json summary = Json::parse(read_file(out / "summary.json"));
  EXPECT_TRUE(summary.contains("pattern"));

  // The written config reproduces the job.
  const JobConfig again = resolve(Config::load(out / "config.toml"));
  EXPECT_EQ(again.parameters.gamma, 20.0);
  EXPECT_EQ(again.run.t_end, 0.2);
  std::filesystem::remove_all(dir);
}

TEST(Commands, SimulateReportsNumericalFailure) {
  const auto dir = scratch_dir("failure");
  const auto config = write_file(dir / "job.toml",
                                 "[mesh]\nlevel = 3\n"
                                 "[run]\nt_end = 0.5\nstop_when_stationary = false\n"
                                 "snapshot_interval = 0.5\n");
  CommandLine cmd{.command = "simulate", .config = config, .out = (dir / "out").string()};
  const Captured c = run(cmd);
  EXPECT_EQ(c.code, kNumericalFailure);
  const Json manifest = Json::parse(read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_TRUE(manifest.contains("failure"));
  std::filesystem::remove_all(dir);
}

TEST(Commands, EigsListsClusters) {
  CommandLine cmd{.command = "eigs", .mesh_level = 3, .k = 16};
  const Captured c = run(cmd);
  ASSERT_EQ(c.code, kSuccess) << c.err;
  EXPECT_NE(c.out.find("2.0"), std::string::npos);
}

TEST(Binary, HelpAndBadFlags) {
  const std::string bin = TMSIM_TEST_BINARY;
  EXPECT_EQ(std::system((bin + " --help > /dev/null 2>&1").c_str()), 0);
  EXPECT_NE(std::system((bin + " analyze --no-such-flag > /dev/null 2>&1").c_str()), 0);
  EXPECT_EQ(std::system((bin + " presets > /dev/null 2>&1").c_str()), 0);
}

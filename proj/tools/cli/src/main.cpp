#include <iostream>

#include <CLI11.hpp>

#include "tmsim/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tmsim: non-local membrane reaction-diffusion simulator and Turing analyzer"};
  app.require_subcommand(1);

  tmsim::cli::CommandLine cmd;
  std::string config;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  int mesh_level = 0;
  double dt = 0.0;
  double t_end = 0.0;
  int k = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Config file (TOML-style sections)");
    sub->add_option("--preset", preset, "Named preset from the presets directory");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--mesh-level", mesh_level, "Icosphere refinement level");
    sub->add_option("--dt", dt, "Time step");
    sub->add_option("--t-end", t_end, "Final time");
  };
  auto* analyze = app.add_subcommand("analyze", "Steady state, conditions and unstable modes");
  auto* simulate = app.add_subcommand("simulate", "Time integration with VTK/CSV/JSON output");
  auto* nondim = app.add_subcommand("nondim", "Map a [dimensional] section to model constants");
  auto* eigs = app.add_subcommand("eigs", "Laplace-Beltrami eigenvalues of the mesh");
  for (auto* sub : {analyze, simulate, nondim, eigs}) add_common(sub);
  eigs->add_option("--k", k, "Number of eigenpairs")->check(CLI::PositiveNumber);
  auto* presets = app.add_subcommand("presets", "List available presets");

  CLI11_PARSE(app, argc, argv);

  if (presets->parsed()) {
    for (const auto& name : tmsim::cli::preset_names()) std::cout << name << '\n';
    return 0;
  }
  for (auto* sub : {analyze, simulate, nondim, eigs}) {
    if (!sub->parsed()) continue;
    cmd.command = sub->get_name();
    if (sub->count("--config")) cmd.config = config;
    if (sub->count("--preset")) cmd.preset = preset;
    if (sub->count("--out")) cmd.out = out;
    if (sub->count("--seed")) cmd.seed = seed;
    if (sub->count("--mesh-level")) cmd.mesh_level = mesh_level;
    if (sub->count("--dt")) cmd.dt = dt;
    if (sub->count("--t-end")) cmd.t_end = t_end;
    if (sub == eigs && sub->count("--k")) cmd.k = k;
  }
  return tmsim::cli::run_command(cmd, std::cout, std::cerr);
}

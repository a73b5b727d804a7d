#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "mgdispatch/report.hpp"

namespace {

int run_command(const mgdispatch::RunConfig& config) {
  try {
    const mgdispatch::MetricsReport report = mgdispatch::run(config);
    for (const auto& [k, v] : report.values) std::printf("%s = %.9g\n", k.c_str(), v);
    std::printf("wall_seconds = %.3f\n", report.wall_seconds);
    return 0;
  } catch (const mgdispatch::SchemaError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const mgdispatch::DimensionMismatch& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const mgdispatch::Error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinated day-ahead dispatch planning for multi-grid systems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Compute a dispatch plan and its metrics");

  std::string mode_str = "centralized";
  mgdispatch::RunConfig config;
  double rho0 = config.admm.rho0;
  double eps_abs = config.admm.eps_abs;
  double eps_rel = config.admm.eps_rel;
  int max_iter = config.admm.max_iter;
  double nu = config.admm.build.nu;
  double cos_theta_min = -1.0;
  std::string scenarios_path, synth_path;

  run->add_option("--mode", mode_str, "centralized | admm | baseline")
      ->check(CLI::IsMember({"centralized", "admm", "baseline"}))
      ->required();
  run->add_option("--mv", config.mv_path, "MV grid description (JSON)")->required();
  run->add_option("--lv", config.lv_paths, "LV grid description (JSON), repeatable");
  auto* scen = run->add_option("--scenarios", scenarios_path, "Scenario set (JSON)");
  auto* synth = run->add_option("--synth", synth_path, "Scenario synthesis spec (JSON)");
  scen->excludes(synth);
  run->add_option("--seed", config.seed, "Synthesis RNG seed");
  run->add_option("--out", config.out_dir, "Output directory")->required();
  run->add_option("--rho0", rho0, "Initial coordination penalty");
  run->add_option("--eps-abs", eps_abs, "Absolute convergence tolerance");
  run->add_option("--eps-rel", eps_rel, "Relative convergence tolerance");
  run->add_option("--max-iter", max_iter, "Coordination iteration cap");
  run->add_option("--nu", nu, "Power-factor mutual-exclusivity weight");
  run->add_option("--cos-theta-min", cos_theta_min,
                  "Override the power-factor limit of every grid");

  CLI11_PARSE(app, argc, argv);

  if (scenarios_path.empty() && synth_path.empty()) {
    std::fprintf(stderr, "validation error: --scenarios or --synth is required\n");
    return 2;
  }
  if (!scenarios_path.empty()) config.scenario_path = scenarios_path;
  if (!synth_path.empty()) config.synth_spec_path = synth_path;

  config.mode = mode_str == "admm"       ? mgdispatch::RunMode::Admm
                : mode_str == "baseline" ? mgdispatch::RunMode::Baseline
                                         : mgdispatch::RunMode::Centralized;
  config.admm.rho0 = rho0;
  config.admm.eps_abs = eps_abs;
  config.admm.eps_rel = eps_rel;
  config.admm.max_iter = max_iter;
  config.admm.build.nu = nu;
  if (cos_theta_min > 0.0) config.cos_theta_min_override = cos_theta_min;

  return run_command(config);
}

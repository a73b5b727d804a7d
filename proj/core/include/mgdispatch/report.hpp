#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgdispatch/admm.hpp"
#include "mgdispatch/dispatch_problems.hpp"

namespace mgdispatch {

enum class RunMode { Centralized, Admm, Baseline };

struct RunConfig {
  RunMode mode = RunMode::Centralized;
  std::string mv_path;
  std::vector<std::string> lv_paths;
  std::optional<std::string> scenario_path;
  std::optional<std::string> synth_spec_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  AdmmConfig admm;
  std::optional<double> cos_theta_min_override;
};

struct MetricsReport {
  // Flat key/value map mirrored into metrics.json:
  // mv.mae_kw, mv.nsad_pct, lv.<name>.mae_kw, lv.<name>.nsad_pct,
  // admm.iterations, admm.s_pri_final, admm.s_dual_final.
  std::map<std::string, double> values;
  double wall_seconds = 0.0;  // reported on stdout, kept out of metrics.json
};

// Max over (scenario, t) of |plan - realized|, converted to kW.
double compute_mae(const Eigen::VectorXd& plan_pu, const Eigen::MatrixXd& realized_pu,
                   double base_power_va);

// sum |plan - realized| / sum |plan| * 100, sums over (scenario, t).
double compute_nsad(const Eigen::VectorXd& plan_pu, const Eigen::MatrixXd& realized_pu);

MetricsReport run(const RunConfig& config);

void save_metrics_json(const MetricsReport& report, const std::string& path);

}  // namespace mgdispatch

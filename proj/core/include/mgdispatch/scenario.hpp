#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mgdispatch/errors.hpp"

namespace mgdispatch {

// Uncontrollable injections of one grid under one scenario.
// Rows are non-slack buses, columns timesteps. Injection-positive:
// generation >= 0, demand <= 0.
struct GridInjections {
  Eigen::MatrixXd p_unc;
  Eigen::MatrixXd q_unc;
};

// One joint day-ahead realization across every grid plus the GCP voltage.
struct Scenario {
  int id = 0;
  Eigen::VectorXd gcp_voltage_mag;  // pu, one entry per timestep
  std::map<std::string, GridInjections> grids;
};

struct ScenarioSet {
  std::vector<Scenario> scenarios;
  int horizon = 96;
  double step_seconds = 900.0;

  int n_scenarios() const { return static_cast<int>(scenarios.size()); }
  void validate() const;
};

ScenarioSet load_scenarios(const std::string& path);
ScenarioSet parse_scenarios(const std::string& json_text);
void save_scenarios(const ScenarioSet& set, const std::string& path);

// Synthetic scenario generation: clear-sky bell for PV, double-hump daily
// profile for demand, per-scenario multiplicative noise, GCP voltage i.i.d.
// uniform on [gcp_v_low, gcp_v_high] per (scenario, t).
struct SynthGridSpec {
  int n_nonslack = 0;
  std::vector<int> load_buses;   // non-slack bus ids (1-based bus index)
  double load_peak_pu = 0.0;     // total demand at the daily peak (positive)
  double load_power_factor = 0.95;
  std::vector<int> pv_buses;
  std::vector<double> pv_peak_pu;  // per pv bus, at clear-sky noon
  double load_noise = 0.05;        // per-scenario multiplicative spread
  double pv_noise = 0.2;
};

struct SynthSpec {
  int horizon = 96;
  double step_seconds = 900.0;
  int n_scenarios = 7;
  double gcp_v_low = 0.98;
  double gcp_v_high = 1.02;
  std::map<std::string, SynthGridSpec> grids;
};

SynthSpec load_synth_spec(const std::string& path);
ScenarioSet synthesize_scenarios(const SynthSpec& spec, std::uint64_t seed);

}  // namespace mgdispatch

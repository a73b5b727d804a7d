#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mgdispatch {

using BusId = int;

// Battery storage parameters, per Table-I style sizing. Powers are per-unit
// on the hosting grid's base; the reservoir is kept in Wh so the SOC
// recursion applies the SI conversion exactly once.
struct BessParams {
  std::string id;
  BusId node = 0;
  double s_max = 0.0;      // pu apparent-power rating
  double e_max_wh = 0.0;   // reservoir capacity
  double soc_init = 0.5;   // fraction of reservoir
  double margin_a = 0.1;   // SOC kept within [a, 1-a]
  double base_power_va = 0.0;  // hosting grid base, set on load

  void validate() const;

  // SOC change per step per unit of discharge power (pu):
  // SOC_t = SOC_{t-1} - p_t * soc_slope(Ts)
  double soc_slope(double step_seconds) const {
    return base_power_va * step_seconds / (e_max_wh * 3600.0);
  }
};

// Decision series of one resource, indexed (scenario, t).
struct ResourceProfile {
  std::string resource_id;
  Eigen::MatrixXd p;  // n_scenarios x horizon, pu
  Eigen::MatrixXd q;
};

struct CapabilityViolation {
  int scenario = 0;
  int t = 0;
  std::string kind;  // "apparent_power" | "soc_low" | "soc_high"
  double amount = 0.0;
};

// Feasibility cost of the storage problem: one unit per (scenario, t).
double bess_cost(const ResourceProfile& profile);

// SOC trajectory implied by a discharge series (one scenario row).
Eigen::VectorXd soc_trajectory(const BessParams& params, const Eigen::VectorXd& p,
                               double step_seconds);

std::vector<CapabilityViolation> capability_check(const BessParams& params,
                                                  const ResourceProfile& profile,
                                                  double step_seconds,
                                                  double tol = 1e-6);

}  // namespace mgdispatch

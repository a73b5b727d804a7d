#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mgdispatch/errors.hpp"
#include "mgdispatch/resources.hpp"

namespace mgdispatch {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

using BusId = int;
using BranchId = int;

// Pi-model branch. Shunt admittance is the total for the branch; half is
// lumped at each end.
struct Branch {
  BusId from = 0;
  BusId to = 0;
  Complex series_impedance;
  Complex shunt_admittance_total;
  double ampacity = 0.0;  // per-unit current magnitude limit
};

// Electrical description of one grid (MV or one LV). Bus 0 is the slack
// (GCP for the MV grid, PCC for an LV grid). Immutable after construction.
struct NetworkModel {
  std::string name;
  int n_buses = 0;  // including slack
  std::vector<Branch> branches;
  double base_power_va = 0.0;
  double base_voltage_v = 0.0;
  double v_min = 0.95;
  double v_max = 1.05;
  double cos_theta_min = 0.9;
  // MV bus an LV grid attaches to; unused for the MV grid itself.
  std::optional<BusId> pcc_mv_bus;
  std::vector<BessParams> resources;

  int n_nonslack() const { return n_buses - 1; }
  int n_branches() const { return static_cast<int>(branches.size()); }
  void validate() const;
};

// Converged AC operating point of one grid.
struct GridState {
  ComplexVector bus_voltages;     // all buses, slack first
  ComplexVector branch_currents;  // from-side current of each branch
  Complex slack_injection;        // P0 + jQ0 supplied at the slack bus
  Complex total_loss;             // Pd + jQd absorbed by the grid
};

Eigen::MatrixXcd build_admittance(const NetworkModel& model);

// Full Newton-Raphson on polar mismatch equations, flat start from the slack
// voltage. `nodal_injections` covers non-slack buses (injection-positive).
GridState solve_ac_power_flow(const NetworkModel& model,
                              const ComplexVector& nodal_injections,
                              Complex slack_voltage,
                              double tol = 1e-10,
                              int max_iter = 60);

NetworkModel load_network(const std::string& path);
NetworkModel parse_network(const std::string& json_text, const std::string& name_hint);

}  // namespace mgdispatch

#pragma once

#include <Eigen/Dense>
#include <string>

#include "mgdispatch/network.hpp"

namespace mgdispatch {

// Regularization for |I| derivatives on unloaded branches:
// |I| is replaced by sqrt(I * conj(I) + eps^2).
inline constexpr double kCurrentMagEps = 1e-6;

// Partial derivatives of voltage/current magnitudes and aggregate losses
// w.r.t. nodal active/reactive injections at the non-slack buses.
// Voltage rows cover all buses; the slack row is identically zero.
struct SensitivityCoefficients {
  Eigen::MatrixXd dv_dp;  // n_buses x n_nonslack
  Eigen::MatrixXd dv_dq;
  Eigen::MatrixXd di_dp;  // n_branches x n_nonslack
  Eigen::MatrixXd di_dq;
  Eigen::RowVectorXd dpd_dp;  // 1 x n_nonslack
  Eigen::RowVectorXd dpd_dq;
  Eigen::RowVectorXd dqd_dp;
  Eigen::RowVectorXd dqd_dq;
};

SensitivityCoefficients compute_sensitivity_coefficients(const NetworkModel& model,
                                                         const GridState& state);

// First-order grid model around one operating point:
//   |V|      = a_v [P; Q] + b_v
//   |I|      = a_i [P; Q] + b_i
//   [Pd; Qd] = a_d [P; Q] + b_d
// where (P, Q) are the controllable nodal injections at non-slack buses.
// Offsets absorb the uncontrollable injections of the operating point.
struct LinearGridModel {
  Eigen::MatrixXd a_v;  // n_nonslack x 2 n_nonslack
  Eigen::VectorXd b_v;
  Eigen::MatrixXd a_i;  // n_branches x 2 n_nonslack
  Eigen::VectorXd b_i;
  Eigen::MatrixXd a_d;  // 2 x 2 n_nonslack
  Eigen::VectorXd b_d;
  double slack_voltage_mag = 1.0;  // operating-point slack magnitude
  int t = 0;
  int scenario = 0;

  int n_nonslack() const { return static_cast<int>(b_v.size()); }

  Eigen::VectorXd eval_voltages(const Eigen::VectorXd& p_ctrl,
                                const Eigen::VectorXd& q_ctrl) const;
  Eigen::VectorXd eval_currents(const Eigen::VectorXd& p_ctrl,
                                const Eigen::VectorXd& q_ctrl) const;
  Eigen::Vector2d eval_losses(const Eigen::VectorXd& p_ctrl,
                              const Eigen::VectorXd& q_ctrl) const;
};

// `ctrl_p0`, `ctrl_q0`: controllable part of the operating-point injections
// (non-slack buses); zero where nothing is controllable.
LinearGridModel build_linear_model(const NetworkModel& model, const GridState& state,
                                   int t, int scenario,
                                   const Eigen::VectorXd& ctrl_p0,
                                   const Eigen::VectorXd& ctrl_q0);

LinearGridModel build_linear_model(const NetworkModel& model, const GridState& state,
                                   int t = 0, int scenario = 0);

// First-order response to a change of the imposed slack voltage magnitude:
// every bus-voltage offset shifts by the same amount.
LinearGridModel shift_slack_voltage(const LinearGridModel& lin, double new_slack_mag);

// Debug dump: one CSV file per matrix/vector under `dir` with `prefix`.
void dump_linear_model_csv(const LinearGridModel& lin, const std::string& dir,
                           const std::string& prefix);

}  // namespace mgdispatch

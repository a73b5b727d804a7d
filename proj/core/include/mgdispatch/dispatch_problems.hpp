#pragma once

#include <map>
#include <string>
#include <vector>

#include "mgdispatch/linearization.hpp"
#include "mgdispatch/network.hpp"
#include "mgdispatch/qp.hpp"
#include "mgdispatch/qp_solver.hpp"
#include "mgdispatch/resources.hpp"
#include "mgdispatch/scenario.hpp"

namespace mgdispatch {

// Per-grid linearizations and operating points, one per (scenario, t).
struct GridModels {
  std::vector<LinearGridModel> models;  // index scenario * horizon + t
  std::vector<GridState> states;
  // LV grids only: operating-point boundary values at the PCC.
  Eigen::MatrixXd pcc_p0;  // n_scenarios x horizon, LV slack injection, LV base
  Eigen::MatrixXd pcc_q0;
  Eigen::MatrixXd pcc_v0;  // slack voltage magnitude

  const LinearGridModel& at(int scenario, int t, int horizon) const {
    return models[static_cast<std::size_t>(scenario) * horizon + t];
  }
};

// Everything the problem compilers consume: networks, scenarios and the
// point-prediction operating points they were linearized around.
struct MultiGridCase {
  NetworkModel mv;
  std::vector<NetworkModel> lvs;
  ScenarioSet scenarios;
  GridModels mv_models;
  std::vector<GridModels> lv_models;

  int horizon() const { return scenarios.horizon; }
  int n_scenarios() const { return scenarios.n_scenarios(); }
  // LV-to-MV base conversion factor for boundary powers.
  double lv_base_ratio(int lv_index) const {
    return lvs[lv_index].base_power_va / mv.base_power_va;
  }
  int lv_index(const std::string& name) const;
};

// Solves the no-control cascade flow for every (scenario, t): LV grids under
// their uncontrollable injections, PCC flows folded into the MV grid, MV
// slack at the scenario GCP voltage, iterated to a consistent fixed point.
// Linear models are built around those states.
MultiGridCase build_case(NetworkModel mv, std::vector<NetworkModel> lvs,
                         ScenarioSet scenarios);

// Day-ahead plans: the advertised quantity is the active-power series.
struct DispatchPlan {
  Eigen::VectorXd p_disp;  // MV GCP, pu on MV base
  Eigen::VectorXd q_disp;  // retained, not advertised
  std::map<std::string, Eigen::VectorXd> lv_p_pcc;  // per LV, pu on LV base
  std::map<std::string, Eigen::VectorXd> lv_q_pcc;
};

void save_dispatch_csv(const Eigen::VectorXd& p_pu, const Eigen::VectorXd& q_pu,
                       double base_power_va, const std::string& path);

// Boundary series of one coupled agent, indexed (scenario, t). `v` is used
// for LV grids only.
struct BoundarySeries {
  Eigen::MatrixXd p, q, v;
};

// Aggregator-side copies or agent-side originals of every coupled variable.
struct CouplingVars {
  std::map<std::string, BoundarySeries> lv;     // keyed by LV grid name
  std::map<std::string, BoundarySeries> mvccr;  // keyed by resource id
};

BoundarySeries zero_boundary(int n_scenarios, int horizon, bool with_v);

struct BuildOptions {
  double nu = 1e-3;                // power-factor mutual-exclusivity weight
  // Linear companion to nu on the split variables. The quadratic term's
  // marginal price vanishes with |P0|, so near a PCC zero crossing it cannot
  // outbid loss or voltage incentives for inflating P+ + P- beyond |P0|; a
  // small linear charge keeps the split complementary there at negligible
  // cost elsewhere.
  double nu_linear = 1e-4;
  bool polygon_capability = false; // linear capability circle approximation
  int polygon_segments = 16;
  double v0_range = 0.05;          // allowed PCC-voltage excursion from op point
  double cos_theta_min_override = 0.0;  // > 0 replaces every grid's own limit
};

// Centralized oracle over all grids and resources.
QpProblem build_centralized(const MultiGridCase& cs, const BuildOptions& opts = {});

// MV-only problem with every LV PCC flow pinned to a given series (MV base);
// the no-coordination baseline after standalone LV solves.
QpProblem build_mv_fixed_lv(const MultiGridCase& cs,
                            const std::map<std::string, BoundarySeries>& fixed_pcc,
                            const BuildOptions& opts = {});

// Standalone LV dispatch: LV tracking objective, PCC voltage pinned to the
// operating point.
QpProblem build_lv_standalone(const MultiGridCase& cs, int lv_index,
                              const BuildOptions& opts = {});

// ADMM subproblems. Penalty terms expect aggregator copies and scaled duals;
// rho must be positive.
QpProblem build_lv_subproblem(const MultiGridCase& cs, int lv_index,
                              const BoundarySeries& copies, const BoundarySeries& duals,
                              double rho, const BuildOptions& opts = {});

QpProblem build_mvccr_subproblem(const MultiGridCase& cs, int res_index,
                                 const BoundarySeries& copies, const BoundarySeries& duals,
                                 double rho, const BuildOptions& opts = {});

QpProblem build_aggregator_problem(const MultiGridCase& cs, const CouplingVars& originals,
                                   const CouplingVars& duals, double rho,
                                   const BuildOptions& opts = {});

DispatchPlan extract_dispatch_plan(const QpProblem& problem, const QpSolution& solution);

// Realized per-scenario series behind the metrics and plot data.
struct SolutionBundle {
  DispatchPlan plan;
  Eigen::MatrixXd mv_p0, mv_q0;  // GCP injection per (scenario, t), MV base
  std::map<std::string, Eigen::MatrixXd> lv_p0, lv_q0;  // LV base
  std::map<std::string, ResourceProfile> resource_profiles;
  std::map<std::string, Eigen::MatrixXd> resource_soc;
  double objective = 0.0;
};

SolutionBundle extract_bundle(const MultiGridCase& cs, const QpProblem& problem,
                              const QpSolution& solution);

// Shared constraint emitters (also used by the subproblem builders).
void add_bess_block(QpBuilder& b, const BessParams& params, const std::string& entity,
                    int n_scenarios, int horizon, double step_seconds,
                    const BuildOptions& opts);

}  // namespace mgdispatch

#pragma once

// Hand-built networks, scenario sets and small coupled cases shared by the
// test suites. Everything here is constructed in code so the tests do not
// depend on the shipped data files unless they say so explicitly.

#include <cmath>
#include <random>

#include "mgdispatch/dispatch_problems.hpp"
#include "mgdispatch/network.hpp"
#include "mgdispatch/scenario.hpp"

namespace testfix {

using namespace mgdispatch;

inline Branch branch(int from, int to, double r, double x, double shunt_b = 0.0,
                     double ampacity = 5.0) {
  Branch b;
  b.from = from;
  b.to = to;
  b.series_impedance = Complex(r, x);
  b.shunt_admittance_total = Complex(0.0, shunt_b);
  b.ampacity = ampacity;
  return b;
}

// Slack + one load bus, the workhorse of the closed-form checks.
inline NetworkModel two_bus(double r = 0.01, double x = 0.01, double shunt_b = 0.0) {
  NetworkModel m;
  m.name = "two_bus";
  m.n_buses = 2;
  m.branches = {branch(0, 1, r, x, shunt_b)};
  m.base_power_va = 1e6;
  m.base_voltage_v = 20e3;
  m.v_min = 0.9;
  m.v_max = 1.1;
  m.cos_theta_min = 0.9;
  return m;
}

// Fully meshed 3-bus grid with equal impedances.
inline NetworkModel three_bus_triangle(double r = 0.01, double x = 0.02,
                                       double shunt_b = 0.0) {
  NetworkModel m;
  m.name = "triangle";
  m.n_buses = 3;
  m.branches = {branch(0, 1, r, x, shunt_b), branch(1, 2, r, x, shunt_b),
                branch(0, 2, r, x, shunt_b)};
  m.base_power_va = 1e6;
  m.base_voltage_v = 20e3;
  m.v_min = 0.9;
  m.v_max = 1.1;
  m.cos_theta_min = 0.9;
  return m;
}

// Randomized 3-bus instance (topology fixed, parameters drawn) plus a random
// loading that keeps the flow well inside the feasible region.
struct RandomInstance {
  NetworkModel model;
  ComplexVector injections;
  Complex slack_voltage;
};

inline RandomInstance random_three_bus(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomInstance inst;
  inst.model = three_bus_triangle(0.005 + 0.02 * u(rng), 0.01 + 0.03 * u(rng),
                                  0.002 * u(rng));
  inst.injections.resize(2);
  for (int i = 0; i < 2; ++i)
    inst.injections(i) =
        Complex(-0.3 + 0.6 * u(rng), -0.15 + 0.3 * u(rng));
  inst.slack_voltage = Complex(0.98 + 0.04 * u(rng), 0.0);
  return inst;
}

inline BessParams bess(const std::string& id, int node, double s_max, double e_max_wh,
                       double base_power_va, double soc_init = 0.5, double a = 0.1) {
  BessParams p;
  p.id = id;
  p.node = node;
  p.s_max = s_max;
  p.e_max_wh = e_max_wh;
  p.soc_init = soc_init;
  p.margin_a = a;
  p.base_power_va = base_power_va;
  return p;
}

// MV-only scenario set: one load bus series per scenario, flat GCP voltage.
inline ScenarioSet mv_only_scenarios(const std::string& grid_name, int n_nonslack,
                                     int load_bus, const std::vector<Eigen::VectorXd>& p_series,
                                     double q_ratio = 0.3, double gcp_v = 1.0) {
  ScenarioSet set;
  set.horizon = static_cast<int>(p_series.front().size());
  set.step_seconds = 900.0;
  for (std::size_t w = 0; w < p_series.size(); ++w) {
    Scenario sc;
    sc.id = static_cast<int>(w);
    sc.gcp_voltage_mag = Eigen::VectorXd::Constant(set.horizon, gcp_v);
    GridInjections inj;
    inj.p_unc = Eigen::MatrixXd::Zero(n_nonslack, set.horizon);
    inj.q_unc = Eigen::MatrixXd::Zero(n_nonslack, set.horizon);
    inj.p_unc.row(load_bus - 1) = p_series[w].transpose();
    inj.q_unc.row(load_bus - 1) = q_ratio * p_series[w].transpose();
    sc.grids[grid_name] = inj;
    set.scenarios.push_back(std::move(sc));
  }
  return set;
}

// Two symmetric scenarios around a common mean at one MV bus, one storage
// unit big enough to absorb the spread: the optimum is the scenario mean.
inline MultiGridCase symmetric_two_scenario_case(double delta = 0.1, int horizon = 4) {
  NetworkModel mv = two_bus();
  mv.name = "mv";
  mv.resources = {bess("big_bess", 1, 0.5, 1e7, mv.base_power_va)};
  std::vector<Eigen::VectorXd> series{
      Eigen::VectorXd::Constant(horizon, -0.3 + delta),
      Eigen::VectorXd::Constant(horizon, -0.3 - delta)};
  return build_case(mv, {}, mv_only_scenarios("mv", 1, 1, series));
}

// The coupled toy: 3-bus MV hosting two 2-bus LV grids, one storage unit per
// grid, 2 scenarios x 8 steps. Sized so every deviation is absorbable.
inline MultiGridCase toy_case() {
  NetworkModel mv;
  mv.name = "mv";
  mv.n_buses = 3;
  mv.branches = {branch(0, 1, 0.01, 0.02), branch(1, 2, 0.01, 0.02)};
  mv.base_power_va = 1e6;
  mv.base_voltage_v = 20e3;
  mv.v_min = 0.9;
  mv.v_max = 1.1;
  mv.cos_theta_min = 0.9;
  mv.resources = {bess("mv_bess", 1, 0.2, 2e5, mv.base_power_va)};

  auto make_lv = [&](const std::string& name, int host_bus) {
    NetworkModel lv;
    lv.name = name;
    lv.n_buses = 2;
    lv.branches = {branch(0, 1, 0.02, 0.01)};
    lv.base_power_va = 1e5;
    lv.base_voltage_v = 400.0;
    lv.v_min = 0.9;
    lv.v_max = 1.1;
    lv.cos_theta_min = 0.9;
    lv.pcc_mv_bus = host_bus;
    lv.resources = {bess(name + "_bess", 1, 0.3, 3e4, lv.base_power_va)};
    return lv;
  };
  std::vector<NetworkModel> lvs{make_lv("lv1", 1), make_lv("lv2", 2)};

  const int W = 2, N = 8;
  ScenarioSet set;
  set.horizon = N;
  set.step_seconds = 900.0;
  for (int w = 0; w < W; ++w) {
    Scenario sc;
    sc.id = w;
    sc.gcp_voltage_mag.resize(N);
    GridInjections mv_inj;
    mv_inj.p_unc = Eigen::MatrixXd::Zero(2, N);
    mv_inj.q_unc = Eigen::MatrixXd::Zero(2, N);
    const double sign = w == 0 ? 1.0 : -1.0;
    for (int t = 0; t < N; ++t) {
      const double wob = std::sin(2.0 * M_PI * (t + 0.5) / N);
      sc.gcp_voltage_mag(t) = w == 0 ? 1.0 : 0.995;
      mv_inj.p_unc(1, t) = -0.30 + sign * 0.05 * wob;
      mv_inj.q_unc(1, t) = 0.3 * mv_inj.p_unc(1, t);
    }
    sc.grids["mv"] = mv_inj;
    for (const auto& name : {"lv1", "lv2"}) {
      GridInjections inj;
      inj.p_unc = Eigen::MatrixXd::Zero(1, N);
      inj.q_unc = Eigen::MatrixXd::Zero(1, N);
      for (int t = 0; t < N; ++t) {
        const double wob = std::cos(2.0 * M_PI * (t + 0.5) / N);
        inj.p_unc(0, t) = -0.40 + sign * 0.06 * wob;
        inj.q_unc(0, t) = 0.3 * inj.p_unc(0, t);
      }
      sc.grids[name] = inj;
    }
    set.scenarios.push_back(std::move(sc));
  }
  return build_case(mv, lvs, set);
}

}  // namespace testfix

#include <benchmark/benchmark.h>

#include "mgdispatch/linearization.hpp"
#include "mgdispatch/network.hpp"
#include "mgdispatch/qp.hpp"
#include "mgdispatch/qp_solver.hpp"

namespace {

using namespace mgdispatch;

// Radial feeder with n_buses buses, uniform impedance per section.
NetworkModel make_feeder(int n_buses) {
  NetworkModel m;
  m.name = "feeder";
  m.n_buses = n_buses;
  m.base_power_va = 400e3;
  m.base_voltage_v = 400.0;
  for (int i = 1; i < n_buses; ++i) {
    Branch br;
    br.from = i - 1;
    br.to = i;
    br.series_impedance = Complex(0.01, 0.005);
    br.shunt_admittance_total = Complex(0.0, 1e-4);
    br.ampacity = 2.0;
    m.branches.push_back(br);
  }
  return m;
}

ComplexVector make_injections(const NetworkModel& m) {
  ComplexVector s(m.n_nonslack());
  for (int i = 0; i < s.size(); ++i)
    s(i) = Complex(-0.02 - 0.001 * i, -0.006);
  return s;
}

void BM_PowerFlow(benchmark::State& state) {
  const NetworkModel m = make_feeder(static_cast<int>(state.range(0)));
  const ComplexVector s = make_injections(m);
  for (auto _ : state) {
    GridState gs = solve_ac_power_flow(m, s, Complex(1.0, 0.0));
    benchmark::DoNotOptimize(gs.slack_injection);
  }
}
BENCHMARK(BM_PowerFlow)->Arg(8)->Arg(16)->Arg(32);

void BM_SensitivityCoefficients(benchmark::State& state) {
  const NetworkModel m = make_feeder(static_cast<int>(state.range(0)));
  const GridState gs = solve_ac_power_flow(m, make_injections(m), Complex(1.0, 0.0));
  for (auto _ : state) {
    SensitivityCoefficients sc = compute_sensitivity_coefficients(m, gs);
    benchmark::DoNotOptimize(sc.dv_dp);
  }
}
BENCHMARK(BM_SensitivityCoefficients)->Arg(8)->Arg(16)->Arg(32);

// Box-constrained tracking QP with a chained equality structure, similar in
// shape to one agent subproblem.
QpProblem make_qp(int n_steps) {
  QpBuilder b;
  int prev = -1;
  for (int t = 0; t < n_steps; ++t) {
    const int p = b.add_variable({"res", "p", 0, t}, -1.0, 1.0);
    const int soc = b.add_variable({"res", "soc", 0, t}, 0.1, 0.9);
    if (t == 0)
      b.add_row("soc", {{soc, 1.0}, {p, 0.05}}, 0.5, 0.5);
    else
      b.add_row("soc", {{soc, 1.0}, {prev, -1.0}, {p, 0.05}}, 0.0, 0.0);
    b.add_squared_term({{p, 1.0}}, -0.3, 1.0);
    prev = soc;
  }
  return b.freeze();
}

void BM_QpSolve(benchmark::State& state) {
  const QpProblem prob = make_qp(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    QpSolution sol = solve(prob);
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_QpSolve)->Arg(96)->Arg(384);

void BM_QpResolveLinearCost(benchmark::State& state) {
  const QpProblem prob = make_qp(static_cast<int>(state.range(0)));
  QpSolver solver(prob);
  QpSolution sol = solver.solve();
  Eigen::VectorXd q = prob.linear;
  double shift = 0.0;
  for (auto _ : state) {
    shift += 1e-3;
    Eigen::VectorXd q2 = q.array() + shift;
    solver.update_linear_cost(q2);
    sol = solver.solve(sol.primal);
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_QpResolveLinearCost)->Arg(96)->Arg(384);

}  // namespace

BENCHMARK_MAIN();

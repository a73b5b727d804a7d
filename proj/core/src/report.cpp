#include "mgdispatch/report.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace mgdispatch {

namespace {

using nlohmann::json;

void write_plan_vs_realized_csv(const std::string& path, const Eigen::VectorXd& plan,
                                const Eigen::MatrixXd& realized) {
  std::ofstream out(path);
  out.precision(12);
  out << "t,plan_pu";
  for (int w = 0; w < realized.rows(); ++w) out << ",realized_w" << w << "_pu";
  out << '\n';
  for (int t = 0; t < plan.size(); ++t) {
    out << t << ',' << plan(t);
    for (int w = 0; w < realized.rows(); ++w) out << ',' << realized(w, t);
    out << '\n';
  }
}

void write_bess_csv(const std::string& path, const Eigen::MatrixXd& p,
                    const Eigen::MatrixXd& soc) {
  std::ofstream out(path);
  out.precision(12);
  out << "t";
  for (int w = 0; w < p.rows(); ++w) out << ",p_w" << w << "_pu";
  for (int w = 0; w < soc.rows(); ++w) out << ",soc_w" << w;
  out << '\n';
  for (int t = 0; t < p.cols(); ++t) {
    out << t;
    for (int w = 0; w < p.rows(); ++w) out << ',' << p(w, t);
    for (int w = 0; w < soc.rows(); ++w) out << ',' << soc(w, t);
    out << '\n';
  }
}

}  // namespace

double compute_mae(const Eigen::VectorXd& plan_pu, const Eigen::MatrixXd& realized_pu,
                   double base_power_va) {
  double worst = 0.0;
  for (int w = 0; w < realized_pu.rows(); ++w)
    for (int t = 0; t < realized_pu.cols(); ++t)
      worst = std::max(worst, std::abs(plan_pu(t) - realized_pu(w, t)));
  return worst * base_power_va / 1e3;
}

double compute_nsad(const Eigen::VectorXd& plan_pu, const Eigen::MatrixXd& realized_pu) {
  double num = 0.0, den = 0.0;
  for (int w = 0; w < realized_pu.rows(); ++w)
    for (int t = 0; t < realized_pu.cols(); ++t) {
      num += std::abs(plan_pu(t) - realized_pu(w, t));
      den += std::abs(plan_pu(t));
    }
  if (den == 0.0) throw DegeneratePlanError("dispatch plan is identically zero");
  return num / den * 100.0;
}

MetricsReport run(const RunConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;

  NetworkModel mv = load_network(config.mv_path);
  std::vector<NetworkModel> lvs;
  for (const auto& path : config.lv_paths) lvs.push_back(load_network(path));

  ScenarioSet scenarios;
  if (config.scenario_path) {
    scenarios = load_scenarios(*config.scenario_path);
  } else if (config.synth_spec_path) {
    scenarios = synthesize_scenarios(load_synth_spec(*config.synth_spec_path),
                                     config.seed);
  } else {
    throw SchemaError("either a scenario file or a synthesis spec is required");
  }

  AdmmConfig admm_cfg = config.admm;
  if (config.cos_theta_min_override)
    admm_cfg.build.cos_theta_min_override = *config.cos_theta_min_override;

  MultiGridCase cs = build_case(std::move(mv), std::move(lvs), std::move(scenarios));

  fs::create_directories(config.out_dir);
  const fs::path out(config.out_dir);

  SolutionBundle bundle;
  AdmmTrace trace;
  MetricsReport report;

  switch (config.mode) {
    case RunMode::Centralized: {
      QpProblem prob = build_centralized(cs, admm_cfg.build);
      QpSolution sol = solve(prob, std::nullopt, admm_cfg.qp);
      if (sol.status != SolveStatus::Optimal)
        throw NonConvergence("centralized dispatch solve did not reach optimality",
                             sol.iterations, sol.kkt_residual);
      bundle = extract_bundle(cs, prob, sol);
      break;
    }
    case RunMode::Admm: {
      AdmmResult res = run_admm(cs, admm_cfg);
      if (!res.converged)
        throw NonConvergence("coordination loop hit the iteration cap",
                             static_cast<int>(res.state.history.size()),
                             res.state.history.empty() ? 0.0
                                                       : res.state.history.back().s_pri);
      bundle = res.bundle;
      trace = std::move(res.trace);
      report.values["admm.iterations"] = res.state.iteration;
      report.values["admm.s_pri_final"] = res.state.history.back().s_pri;
      report.values["admm.s_dual_final"] = res.state.history.back().s_dual;
      break;
    }
    case RunMode::Baseline: {
      // Each LV plans on its own; the realized PCC flows are then frozen as
      // uncontrollable MV injections before the MV grid plans.
      std::map<std::string, BoundarySeries> fixed;
      std::map<std::string, QpProblem> lv_probs;
      std::map<std::string, QpSolution> lv_sols;
      for (std::size_t l = 0; l < cs.lvs.size(); ++l) {
        const auto& lv = cs.lvs[l];
        QpProblem prob = build_lv_standalone(cs, static_cast<int>(l), admm_cfg.build);
        QpSolution sol = solve(prob, std::nullopt, admm_cfg.qp);
        if (sol.status != SolveStatus::Optimal)
          throw NonConvergence("standalone LV solve did not reach optimality: " + lv.name,
                               sol.iterations, sol.kkt_residual);
        const double ratio = cs.lv_base_ratio(static_cast<int>(l));
        BoundarySeries bs = zero_boundary(cs.n_scenarios(), cs.horizon(), false);
        for (int w = 0; w < cs.n_scenarios(); ++w)
          for (int t = 0; t < cs.horizon(); ++t) {
            bs.p(w, t) =
                ratio * sol.primal(prob.col({"lv:" + lv.name, "p0", w, t}));
            bs.q(w, t) =
                ratio * sol.primal(prob.col({"lv:" + lv.name, "q0", w, t}));
          }
        fixed[lv.name] = bs;
        lv_probs.emplace(lv.name, std::move(prob));
        lv_sols.emplace(lv.name, std::move(sol));
      }
      QpProblem mv_prob = build_mv_fixed_lv(cs, fixed, admm_cfg.build);
      QpSolution mv_sol = solve(mv_prob, std::nullopt, admm_cfg.qp);
      if (mv_sol.status != SolveStatus::Optimal)
        throw NonConvergence("baseline MV solve did not reach optimality",
                             mv_sol.iterations, mv_sol.kkt_residual);
      bundle = extract_bundle(cs, mv_prob, mv_sol);
      for (const auto& lv : cs.lvs) {
        const SolutionBundle lb =
            extract_bundle(cs, lv_probs.at(lv.name), lv_sols.at(lv.name));
        bundle.plan.lv_p_pcc[lv.name] = lb.plan.lv_p_pcc.at(lv.name);
        bundle.plan.lv_q_pcc[lv.name] = lb.plan.lv_q_pcc.at(lv.name);
        bundle.lv_p0[lv.name] = lb.lv_p0.at(lv.name);
        bundle.lv_q0[lv.name] = lb.lv_q0.at(lv.name);
        for (const auto& [id, prof] : lb.resource_profiles) {
          bundle.resource_profiles[id] = prof;
          bundle.resource_soc[id] = lb.resource_soc.at(id);
        }
      }
      break;
    }
  }

  // Metrics.
  report.values["mv.mae_kw"] =
      compute_mae(bundle.plan.p_disp, bundle.mv_p0, cs.mv.base_power_va);
  report.values["mv.nsad_pct"] = compute_nsad(bundle.plan.p_disp, bundle.mv_p0);
  for (const auto& lv : cs.lvs) {
    report.values["lv." + lv.name + ".mae_kw"] = compute_mae(
        bundle.plan.lv_p_pcc.at(lv.name), bundle.lv_p0.at(lv.name), lv.base_power_va);
    report.values["lv." + lv.name + ".nsad_pct"] =
        compute_nsad(bundle.plan.lv_p_pcc.at(lv.name), bundle.lv_p0.at(lv.name));
  }

  // Artifacts: plans, trace, metrics, plot data.
  save_dispatch_csv(bundle.plan.p_disp, bundle.plan.q_disp, cs.mv.base_power_va,
                    (out / "dispatch_mv.csv").string());
  for (const auto& lv : cs.lvs)
    save_dispatch_csv(bundle.plan.lv_p_pcc.at(lv.name), bundle.plan.lv_q_pcc.at(lv.name),
                      lv.base_power_va, (out / ("dispatch_lv_" + lv.name + ".csv")).string());
  save_trace(trace, (out / "trace.ndjson").string());
  write_plan_vs_realized_csv((out / "plot_gcp_power.csv").string(), bundle.plan.p_disp,
                             bundle.mv_p0);
  for (const auto& lv : cs.lvs)
    write_plan_vs_realized_csv((out / ("plot_pcc_power_" + lv.name + ".csv")).string(),
                               bundle.plan.lv_p_pcc.at(lv.name), bundle.lv_p0.at(lv.name));
  for (const auto& [id, prof] : bundle.resource_profiles)
    write_bess_csv((out / ("plot_bess_" + id + ".csv")).string(), prof.p,
                   bundle.resource_soc.at(id));
  save_metrics_json(report, (out / "metrics.json").string());

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

void save_metrics_json(const MetricsReport& report, const std::string& path) {
  // Timings stay out of the file so identical runs produce identical bytes.
  json j = json::object();
  for (const auto& [k, v] : report.values) j[k] = v;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace mgdispatch

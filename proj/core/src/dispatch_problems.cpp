#include "mgdispatch/dispatch_problems.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace mgdispatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cot_theta(double cos_theta_min) {
  const double s = std::sqrt(std::max(0.0, 1.0 - cos_theta_min * cos_theta_min));
  if (s <= 0.0) throw Error("cos_theta_min of 1.0 leaves no reactive headroom");
  return cos_theta_min / s;
}

VarKey key(const std::string& entity, const std::string& symbol, int w = -1, int t = -1) {
  return VarKey{entity, symbol, w, t};
}

}  // namespace

int MultiGridCase::lv_index(const std::string& name) const {
  for (std::size_t i = 0; i < lvs.size(); ++i)
    if (lvs[i].name == name) return static_cast<int>(i);
  throw Error("unknown LV grid: " + name);
}

BoundarySeries zero_boundary(int n_scenarios, int horizon, bool with_v) {
  BoundarySeries s;
  s.p = Eigen::MatrixXd::Zero(n_scenarios, horizon);
  s.q = Eigen::MatrixXd::Zero(n_scenarios, horizon);
  if (with_v) s.v = Eigen::MatrixXd::Zero(n_scenarios, horizon);
  return s;
}

MultiGridCase build_case(NetworkModel mv, std::vector<NetworkModel> lvs,
                         ScenarioSet scenarios) {
  mv.validate();
  scenarios.validate();
  MultiGridCase cs;
  cs.mv = std::move(mv);
  cs.lvs = std::move(lvs);
  cs.scenarios = std::move(scenarios);

  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  const int L = static_cast<int>(cs.lvs.size());

  for (const auto& lv : cs.lvs) {
    lv.validate();
    if (!lv.pcc_mv_bus || *lv.pcc_mv_bus < 1 || *lv.pcc_mv_bus >= cs.mv.n_buses)
      throw SchemaError("LV grid '" + lv.name + "': missing or invalid pcc_mv_bus");
  }
  auto injections_of = [&](const NetworkModel& grid, int w) -> const GridInjections& {
    const auto& grids = cs.scenarios.scenarios[w].grids;
    auto it = grids.find(grid.name);
    if (it == grids.end())
      throw DimensionMismatch("scenario " + std::to_string(w) +
                              " has no injections for grid '" + grid.name + "'");
    if (it->second.p_unc.rows() != grid.n_nonslack())
      throw DimensionMismatch("grid '" + grid.name + "': scenario bus count " +
                              std::to_string(it->second.p_unc.rows()) + " != " +
                              std::to_string(grid.n_nonslack()));
    return it->second;
  };

  cs.mv_models.models.resize(static_cast<std::size_t>(W) * N);
  cs.mv_models.states.resize(static_cast<std::size_t>(W) * N);
  cs.lv_models.resize(L);
  for (int l = 0; l < L; ++l) {
    cs.lv_models[l].models.resize(static_cast<std::size_t>(W) * N);
    cs.lv_models[l].states.resize(static_cast<std::size_t>(W) * N);
    cs.lv_models[l].pcc_p0.resize(W, N);
    cs.lv_models[l].pcc_q0.resize(W, N);
    cs.lv_models[l].pcc_v0.resize(W, N);
  }

  for (int w = 0; w < W; ++w) {
    const auto& mv_inj = injections_of(cs.mv, w);
    std::vector<double> v_lv(L, 1.0);
    for (int t = 0; t < N; ++t) {
      const std::size_t idx = static_cast<std::size_t>(w) * N + t;
      const double v_gcp = cs.scenarios.scenarios[w].gcp_voltage_mag(t);
      std::vector<GridState> lv_states(L);
      std::vector<Complex> pcc_flow(L);
      GridState mv_state;
      // No-control cascade: LV flows feed the MV flow; the MV voltage at the
      // hosting bus feeds back as the LV slack voltage.
      for (int pass = 0; pass < 25; ++pass) {
        for (int l = 0; l < L; ++l) {
          const auto& inj = injections_of(cs.lvs[l], w);
          ComplexVector s(cs.lvs[l].n_nonslack());
          for (int i = 0; i < s.size(); ++i)
            s(i) = Complex(inj.p_unc(i, t), inj.q_unc(i, t));
          lv_states[l] = solve_ac_power_flow(cs.lvs[l], s, Complex(v_lv[l], 0.0));
          pcc_flow[l] = lv_states[l].slack_injection;
        }
        ComplexVector s_mv(cs.mv.n_nonslack());
        for (int i = 0; i < s_mv.size(); ++i)
          s_mv(i) = Complex(mv_inj.p_unc(i, t), mv_inj.q_unc(i, t));
        for (int l = 0; l < L; ++l)
          s_mv(*cs.lvs[l].pcc_mv_bus - 1) -= cs.lv_base_ratio(l) * pcc_flow[l];
        mv_state = solve_ac_power_flow(cs.mv, s_mv, Complex(v_gcp, 0.0));
        double change = 0.0;
        for (int l = 0; l < L; ++l) {
          const double vh = std::abs(mv_state.bus_voltages(*cs.lvs[l].pcc_mv_bus));
          change = std::max(change, std::abs(vh - v_lv[l]));
          v_lv[l] = vh;
        }
        if (change < 1e-11) break;
      }

      Eigen::VectorXd ctrl_p0 = Eigen::VectorXd::Zero(cs.mv.n_nonslack());
      Eigen::VectorXd ctrl_q0 = Eigen::VectorXd::Zero(cs.mv.n_nonslack());
      for (int l = 0; l < L; ++l) {
        const double ratio = cs.lv_base_ratio(l);
        ctrl_p0(*cs.lvs[l].pcc_mv_bus - 1) -= ratio * pcc_flow[l].real();
        ctrl_q0(*cs.lvs[l].pcc_mv_bus - 1) -= ratio * pcc_flow[l].imag();
      }
      cs.mv_models.states[idx] = mv_state;
      cs.mv_models.models[idx] = build_linear_model(cs.mv, mv_state, t, w, ctrl_p0, ctrl_q0);

      for (int l = 0; l < L; ++l) {
        cs.lv_models[l].states[idx] = lv_states[l];
        cs.lv_models[l].models[idx] = build_linear_model(cs.lvs[l], lv_states[l], t, w);
        cs.lv_models[l].pcc_p0(w, t) = pcc_flow[l].real();
        cs.lv_models[l].pcc_q0(w, t) = pcc_flow[l].imag();
        cs.lv_models[l].pcc_v0(w, t) = v_lv[l];
      }
    }
  }
  return cs;
}

void add_bess_block(QpBuilder& b, const BessParams& params, const std::string& entity,
                    int n_scenarios, int horizon, double step_seconds,
                    const BuildOptions& opts) {
  const double slope = params.soc_slope(step_seconds);
  for (int w = 0; w < n_scenarios; ++w) {
    for (int t = 0; t < horizon; ++t) {
      const int p = b.add_variable(key(entity, "p", w, t));
      const int q = b.add_variable(key(entity, "q", w, t));
      const int soc = b.add_variable(key(entity, "soc", w, t), params.margin_a,
                                     1.0 - params.margin_a);
      // SOC recursion, SI conversion applied once through soc_slope.
      if (t == 0) {
        b.add_row(entity + ".soc_rec", {{soc, 1.0}, {p, slope}}, params.soc_init,
                  params.soc_init);
      } else {
        const int soc_prev = b.variable(key(entity, "soc", w, t - 1));
        b.add_row(entity + ".soc_rec", {{soc, 1.0}, {soc_prev, -1.0}, {p, slope}}, 0.0,
                  0.0);
      }
      if (opts.polygon_capability) {
        for (int s = 0; s < opts.polygon_segments; ++s) {
          const double phi = 2.0 * kPi * s / opts.polygon_segments;
          b.add_row(entity + ".cap_poly",
                    {{p, std::cos(phi)}, {q, std::sin(phi)}}, -kInf, params.s_max);
        }
      } else {
        const int rp = b.add_row(entity + ".cap", {{p, 1.0}}, -kInf, kInf);
        const int rq = b.add_row(entity + ".cap", {{q, 1.0}}, -kInf, kInf);
        b.add_ball({rp, rq}, params.s_max);
      }
    }
  }
  // Constant feasibility cost f_r.
  b.add_constant(static_cast<double>(n_scenarios) * horizon);
}

namespace {

// Columns of one grid's controllable injection vector: variable column plus
// the coefficient with which it enters the nodal injection at `bus`.
struct CtrlEntry {
  int bus = 0;  // 1-based non-slack bus index
  int p_col = -1, q_col = -1;
  double sign = 1.0;
};

// Emits the MV grid block: slack/loss/relaxation variables, linearized grid
// rows and the dispatch tracking objective. Resource p/q columns and (when
// `fixed_pcc` is absent) LV boundary columns must already exist.
void add_mv_grid_block(QpBuilder& b, const MultiGridCase& cs,
                       const std::map<std::string, BoundarySeries>* fixed_pcc,
                       const BuildOptions& opts) {
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  const int nb = cs.mv.n_nonslack();
  const double cot = cot_theta(opts.cos_theta_min_override > 0.0
                                   ? opts.cos_theta_min_override
                                   : cs.mv.cos_theta_min);

  for (int t = 0; t < N; ++t) {
    b.add_variable(key("mv", "Pdisp", -1, t));
    b.add_variable(key("mv", "Qdisp", -1, t));
  }

  for (int w = 0; w < W; ++w) {
    const auto& grids = cs.scenarios.scenarios[w].grids;
    const auto& inj = grids.at(cs.mv.name);
    for (int t = 0; t < N; ++t) {
      const auto& lin = cs.mv_models.at(w, t, N);
      const int p0 = b.add_variable(key("mv", "P0", w, t));
      const int q0 = b.add_variable(key("mv", "Q0", w, t));
      const int pd = b.add_variable(key("mv", "Pd", w, t));
      const int qd = b.add_variable(key("mv", "Qd", w, t));
      const int pp = b.add_variable(key("mv", "Pplus", w, t), 0.0, kInf);
      const int pm = b.add_variable(key("mv", "Pminus", w, t), 0.0, kInf);

      // Controllable MV injections: MVCCRs and (unless pinned) LV PCC flows.
      std::vector<CtrlEntry> ctrl;
      for (const auto& res : cs.mv.resources) {
        CtrlEntry e;
        e.bus = res.node;
        e.p_col = b.variable(key("res:" + res.id, "p", w, t));
        e.q_col = b.variable(key("res:" + res.id, "q", w, t));
        e.sign = 1.0;
        ctrl.push_back(e);
      }
      Eigen::VectorXd fixed_p = Eigen::VectorXd::Zero(nb);
      Eigen::VectorXd fixed_q = Eigen::VectorXd::Zero(nb);
      for (std::size_t l = 0; l < cs.lvs.size(); ++l) {
        const int host = *cs.lvs[l].pcc_mv_bus;
        if (fixed_pcc) {
          const auto& fix = fixed_pcc->at(cs.lvs[l].name);
          fixed_p(host - 1) -= fix.p(w, t);
          fixed_q(host - 1) -= fix.q(w, t);
        } else {
          CtrlEntry e;
          e.bus = host;
          e.p_col = b.add_variable(key("lvpcc:" + cs.lvs[l].name, "P", w, t));
          e.q_col = b.add_variable(key("lvpcc:" + cs.lvs[l].name, "Q", w, t));
          e.sign = -1.0;  // LV demand withdraws at the hosting bus
          ctrl.push_back(e);
        }
      }

      // Slack power balance with losses.
      {
        std::vector<std::pair<int, double>> terms_p{{p0, 1.0}, {pd, -1.0}};
        std::vector<std::pair<int, double>> terms_q{{q0, 1.0}, {qd, -1.0}};
        for (const auto& e : ctrl) {
          terms_p.push_back({e.p_col, e.sign});
          terms_q.push_back({e.q_col, e.sign});
        }
        const double rhs_p = -(inj.p_unc.col(t).sum() + fixed_p.sum());
        const double rhs_q = -(inj.q_unc.col(t).sum() + fixed_q.sum());
        b.add_row("mv.balance.p", terms_p, rhs_p, rhs_p);
        b.add_row("mv.balance.q", terms_q, rhs_q, rhs_q);
      }

      auto x_terms = [&](const Eigen::MatrixXd& a, int row) {
        // Expands a linear-model row over the controllable columns; returns
        // (terms, fixed_contribution).
        std::pair<std::vector<std::pair<int, double>>, double> out;
        for (const auto& e : ctrl) {
          const double cp = a(row, e.bus - 1);
          const double cq = a(row, nb + e.bus - 1);
          if (cp != 0.0) out.first.push_back({e.p_col, e.sign * cp});
          if (cq != 0.0) out.first.push_back({e.q_col, e.sign * cq});
        }
        out.second = a.row(row).head(nb).dot(fixed_p) + a.row(row).tail(nb).dot(fixed_q);
        return out;
      };

      // (6c): loss model rows.
      for (int r = 0; r < 2; ++r) {
        auto [terms, fix] = x_terms(lin.a_d, r);
        terms.push_back({r == 0 ? pd : qd, -1.0});
        const double rhs = -(lin.b_d(r) + fix);
        b.add_row(r == 0 ? "mv.loss.p" : "mv.loss.q", terms, rhs, rhs);
      }
      // Power-factor relaxation at the GCP.
      b.add_row("mv.pf.split", {{p0, 1.0}, {pp, -1.0}, {pm, 1.0}}, 0.0, 0.0);
      b.add_row("mv.pf.cone1", {{pp, 1.0}, {pm, 1.0}, {q0, -cot}}, 0.0, kInf);
      b.add_row("mv.pf.cone2", {{pp, 1.0}, {pm, 1.0}, {q0, cot}}, 0.0, kInf);
      b.add_quadratic(pp, pp, opts.nu);
      b.add_quadratic(pm, pm, opts.nu);
      b.add_linear(pp, opts.nu_linear);
      b.add_linear(pm, opts.nu_linear);

      // (6e)/(6f): nodal voltage and branch current bounds.
      for (int i = 0; i < nb; ++i) {
        auto [terms, fix] = x_terms(lin.a_v, i);
        b.add_row("mv.voltage", terms, cs.mv.v_min - lin.b_v(i) - fix,
                  cs.mv.v_max - lin.b_v(i) - fix);
      }
      for (int i = 0; i < cs.mv.n_branches(); ++i) {
        auto [terms, fix] = x_terms(lin.a_i, i);
        // Only the ampacity cap is physical; the linearized magnitude may go
        // negative away from the operating point, so no lower bound.
        b.add_row("mv.current", terms, -kInf,
                  cs.mv.branches[i].ampacity - lin.b_i(i) - fix);
      }
      // MV-side voltage magnitude at each LV hosting bus (part of the PCC
      // voltage coupling).
      if (!fixed_pcc) {
        for (std::size_t l = 0; l < cs.lvs.size(); ++l) {
          const int host = *cs.lvs[l].pcc_mv_bus;
          const int vl = b.add_variable(key("lvpcc:" + cs.lvs[l].name, "V", w, t));
          auto [terms, fix] = x_terms(lin.a_v, host - 1);
          terms.push_back({vl, -1.0});
          const double rhs = -(lin.b_v(host - 1) + fix);
          b.add_row("mv.voltage_def." + cs.lvs[l].name, terms, rhs, rhs);
        }
      }

      // Dispatch tracking.
      const int pdisp = b.variable(key("mv", "Pdisp", -1, t));
      const int qdisp = b.variable(key("mv", "Qdisp", -1, t));
      b.add_squared_term({{p0, 1.0}, {pdisp, -1.0}}, 0.0, 1.0);
      b.add_squared_term({{q0, 1.0}, {qdisp, -1.0}}, 0.0, 1.0);
    }
  }
}

// LV grid block: internal slack/loss/relaxation variables, linearized rows,
// PCC tracking objective, and the local resource blocks.
void add_lv_grid_block(QpBuilder& b, const MultiGridCase& cs, int lv_index, bool v0_free,
                       const BuildOptions& opts) {
  const auto& lv = cs.lvs[lv_index];
  const auto& gm = cs.lv_models[lv_index];
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  const int nb = lv.n_nonslack();
  const std::string ent = "lv:" + lv.name;
  const double cot = cot_theta(opts.cos_theta_min_override > 0.0
                                   ? opts.cos_theta_min_override
                                   : lv.cos_theta_min);
  // Objective terms are weighted onto the MV power base so a watt of tracking
  // error costs the same in every grid and PCC flexibility is exchanged at
  // fair value across the coupling.
  const double ratio = cs.lv_base_ratio(lv_index);
  const double obj_w = ratio * ratio;

  for (const auto& res : lv.resources)
    add_bess_block(b, res, "res:" + res.id, W, N, cs.scenarios.step_seconds, opts);

  for (int t = 0; t < N; ++t) {
    b.add_variable(key(ent, "ppcc", -1, t));
    b.add_variable(key(ent, "qpcc", -1, t));
  }

  for (int w = 0; w < W; ++w) {
    const auto& inj = cs.scenarios.scenarios[w].grids.at(lv.name);
    for (int t = 0; t < N; ++t) {
      const auto& lin = gm.at(w, t, N);
      const double v0_op = lin.slack_voltage_mag;
      const int p0 = b.add_variable(key(ent, "p0", w, t));
      const int q0 = b.add_variable(key(ent, "q0", w, t));
      const int pd = b.add_variable(key(ent, "pd", w, t));
      const int qd = b.add_variable(key(ent, "qd", w, t));
      const int pp = b.add_variable(key(ent, "pplus", w, t), 0.0, kInf);
      const int pm = b.add_variable(key(ent, "pminus", w, t), 0.0, kInf);
      const int v0 = v0_free
                         ? b.add_variable(key(ent, "v0", w, t), v0_op - opts.v0_range,
                                          v0_op + opts.v0_range)
                         : b.add_variable(key(ent, "v0", w, t), v0_op, v0_op);

      std::vector<CtrlEntry> ctrl;
      for (const auto& res : lv.resources) {
        CtrlEntry e;
        e.bus = res.node;
        e.p_col = b.variable(key("res:" + res.id, "p", w, t));
        e.q_col = b.variable(key("res:" + res.id, "q", w, t));
        ctrl.push_back(e);
      }

      auto x_terms = [&](const Eigen::MatrixXd& a, int row) {
        std::vector<std::pair<int, double>> terms;
        for (const auto& e : ctrl) {
          const double cp = a(row, e.bus - 1);
          const double cq = a(row, nb + e.bus - 1);
          if (cp != 0.0) terms.push_back({e.p_col, cp});
          if (cq != 0.0) terms.push_back({e.q_col, cq});
        }
        return terms;
      };

      // (8a)/(8b): PCC power balance with losses.
      {
        std::vector<std::pair<int, double>> terms_p{{p0, 1.0}, {pd, -1.0}};
        std::vector<std::pair<int, double>> terms_q{{q0, 1.0}, {qd, -1.0}};
        for (const auto& e : ctrl) {
          terms_p.push_back({e.p_col, 1.0});
          terms_q.push_back({e.q_col, 1.0});
        }
        const double rhs_p = -inj.p_unc.col(t).sum();
        const double rhs_q = -inj.q_unc.col(t).sum();
        b.add_row(ent + ".balance.p", terms_p, rhs_p, rhs_p);
        b.add_row(ent + ".balance.q", terms_q, rhs_q, rhs_q);
      }
      // (8c): loss model.
      for (int r = 0; r < 2; ++r) {
        auto terms = x_terms(lin.a_d, r);
        terms.push_back({r == 0 ? pd : qd, -1.0});
        b.add_row(r == 0 ? ent + ".loss.p" : ent + ".loss.q", terms, -lin.b_d(r),
                  -lin.b_d(r));
      }
      // (8e): PCC power-factor relaxation.
      b.add_row(ent + ".pf.split", {{p0, 1.0}, {pp, -1.0}, {pm, 1.0}}, 0.0, 0.0);
      b.add_row(ent + ".pf.cone1", {{pp, 1.0}, {pm, 1.0}, {q0, -cot}}, 0.0, kInf);
      b.add_row(ent + ".pf.cone2", {{pp, 1.0}, {pm, 1.0}, {q0, cot}}, 0.0, kInf);
      // The quadratic weight scales with this grid's objective block, like
      // the tracking terms; the linear companion stays at absolute scale so
      // the split cannot be inflated near PCC zero crossings (see nu_linear).
      b.add_quadratic(pp, pp, opts.nu * obj_w);
      b.add_quadratic(pm, pm, opts.nu * obj_w);
      b.add_linear(pp, opts.nu_linear);
      b.add_linear(pm, opts.nu_linear);

      // (8f)/(8g): voltage rows respond first-order to the PCC voltage.
      for (int i = 0; i < nb; ++i) {
        auto terms = x_terms(lin.a_v, i);
        terms.push_back({v0, 1.0});
        b.add_row(ent + ".voltage", terms, lv.v_min - lin.b_v(i) + v0_op,
                  lv.v_max - lin.b_v(i) + v0_op);
      }
      for (int i = 0; i < lv.n_branches(); ++i) {
        auto terms = x_terms(lin.a_i, i);
        // As in the MV block: ampacity cap only, no artificial lower bound on
        // the linearized magnitude.
        b.add_row(ent + ".current", terms, -kInf,
                  lv.branches[i].ampacity - lin.b_i(i));
      }

      // PCC plan tracking.
      const int ppcc = b.variable(key(ent, "ppcc", -1, t));
      const int qpcc = b.variable(key(ent, "qpcc", -1, t));
      b.add_squared_term({{p0, 1.0}, {ppcc, -1.0}}, 0.0, obj_w);
      b.add_squared_term({{q0, 1.0}, {qpcc, -1.0}}, 0.0, obj_w);
    }
  }
}

}  // namespace

QpProblem build_centralized(const MultiGridCase& cs, const BuildOptions& opts) {
  QpBuilder b;
  const int W = cs.n_scenarios();
  const int N = cs.horizon();

  for (const auto& res : cs.mv.resources)
    add_bess_block(b, res, "res:" + res.id, W, N, cs.scenarios.step_seconds, opts);
  for (std::size_t l = 0; l < cs.lvs.size(); ++l)
    add_lv_grid_block(b, cs, static_cast<int>(l), /*v0_free=*/true, opts);
  add_mv_grid_block(b, cs, nullptr, opts);

  // PCC coupling between the MV-side boundary variables and the LV slack
  // quantities (same physical flow, bases converted).
  for (std::size_t l = 0; l < cs.lvs.size(); ++l) {
    const auto& lv = cs.lvs[l];
    const double ratio = cs.lv_base_ratio(static_cast<int>(l));
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        b.add_row("lv:" + lv.name + ".pcouple",
                  {{b.variable(key("lvpcc:" + lv.name, "P", w, t)), 1.0},
                   {b.variable(key("lv:" + lv.name, "p0", w, t)), -ratio}},
                  0.0, 0.0);
        b.add_row("lv:" + lv.name + ".qcouple",
                  {{b.variable(key("lvpcc:" + lv.name, "Q", w, t)), 1.0},
                   {b.variable(key("lv:" + lv.name, "q0", w, t)), -ratio}},
                  0.0, 0.0);
        b.add_row("lv:" + lv.name + ".vcouple",
                  {{b.variable(key("lvpcc:" + lv.name, "V", w, t)), 1.0},
                   {b.variable(key("lv:" + lv.name, "v0", w, t)), -1.0}},
                  0.0, 0.0);
      }
  }
  return b.freeze();
}

QpProblem build_mv_fixed_lv(const MultiGridCase& cs,
                            const std::map<std::string, BoundarySeries>& fixed_pcc,
                            const BuildOptions& opts) {
  QpBuilder b;
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  for (const auto& res : cs.mv.resources)
    add_bess_block(b, res, "res:" + res.id, W, N, cs.scenarios.step_seconds, opts);
  add_mv_grid_block(b, cs, &fixed_pcc, opts);
  return b.freeze();
}

QpProblem build_lv_standalone(const MultiGridCase& cs, int lv_index,
                              const BuildOptions& opts) {
  QpBuilder b;
  add_lv_grid_block(b, cs, lv_index, /*v0_free=*/false, opts);
  return b.freeze();
}

QpProblem build_lv_subproblem(const MultiGridCase& cs, int lv_index,
                              const BoundarySeries& copies, const BoundarySeries& duals,
                              double rho, const BuildOptions& opts) {
  if (rho <= 0.0) throw Error("build_lv_subproblem: rho must be positive");
  QpBuilder b;
  add_lv_grid_block(b, cs, lv_index, /*v0_free=*/true, opts);
  const auto& lv = cs.lvs[lv_index];
  const double ratio = cs.lv_base_ratio(lv_index);
  const std::string ent = "lv:" + lv.name;
  for (int w = 0; w < cs.n_scenarios(); ++w)
    for (int t = 0; t < cs.horizon(); ++t) {
      // rho/2 || original - copy + u ||^2, originals expressed on the MV base.
      b.add_squared_term({{b.variable(key(ent, "p0", w, t)), -ratio}},
                         copies.p(w, t) - duals.p(w, t), 0.5 * rho);
      b.add_squared_term({{b.variable(key(ent, "q0", w, t)), -ratio}},
                         copies.q(w, t) - duals.q(w, t), 0.5 * rho);
      b.add_squared_term({{b.variable(key(ent, "v0", w, t)), -1.0}},
                         copies.v(w, t) - duals.v(w, t), 0.5 * rho);
    }
  return b.freeze();
}

QpProblem build_mvccr_subproblem(const MultiGridCase& cs, int res_index,
                                 const BoundarySeries& copies, const BoundarySeries& duals,
                                 double rho, const BuildOptions& opts) {
  if (rho <= 0.0) throw Error("build_mvccr_subproblem: rho must be positive");
  const auto& res = cs.mv.resources.at(res_index);
  QpBuilder b;
  const std::string ent = "res:" + res.id;
  add_bess_block(b, res, ent, cs.n_scenarios(), cs.horizon(), cs.scenarios.step_seconds,
                 opts);
  for (int w = 0; w < cs.n_scenarios(); ++w)
    for (int t = 0; t < cs.horizon(); ++t) {
      b.add_squared_term({{b.variable(key(ent, "p", w, t)), -1.0}},
                         copies.p(w, t) - duals.p(w, t), 0.5 * rho);
      b.add_squared_term({{b.variable(key(ent, "q", w, t)), -1.0}},
                         copies.q(w, t) - duals.q(w, t), 0.5 * rho);
    }
  return b.freeze();
}

QpProblem build_aggregator_problem(const MultiGridCase& cs, const CouplingVars& originals,
                                   const CouplingVars& duals, double rho,
                                   const BuildOptions& opts) {
  if (rho <= 0.0) throw Error("build_aggregator_problem: rho must be positive");
  QpBuilder b;
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  // Copies of the MVCCR boundary variables: plain columns, no resource model.
  for (const auto& res : cs.mv.resources)
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        b.add_variable(key("res:" + res.id, "p", w, t));
        b.add_variable(key("res:" + res.id, "q", w, t));
      }
  add_mv_grid_block(b, cs, nullptr, opts);

  for (const auto& res : cs.mv.resources) {
    const auto& orig = originals.mvccr.at(res.id);
    const auto& du = duals.mvccr.at(res.id);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        b.add_squared_term({{b.variable(key("res:" + res.id, "p", w, t)), 1.0}},
                           -(orig.p(w, t) + du.p(w, t)), 0.5 * rho);
        b.add_squared_term({{b.variable(key("res:" + res.id, "q", w, t)), 1.0}},
                           -(orig.q(w, t) + du.q(w, t)), 0.5 * rho);
      }
  }
  for (const auto& lv : cs.lvs) {
    const auto& orig = originals.lv.at(lv.name);
    const auto& du = duals.lv.at(lv.name);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        b.add_squared_term({{b.variable(key("lvpcc:" + lv.name, "P", w, t)), 1.0}},
                           -(orig.p(w, t) + du.p(w, t)), 0.5 * rho);
        b.add_squared_term({{b.variable(key("lvpcc:" + lv.name, "Q", w, t)), 1.0}},
                           -(orig.q(w, t) + du.q(w, t)), 0.5 * rho);
        b.add_squared_term({{b.variable(key("lvpcc:" + lv.name, "V", w, t)), 1.0}},
                           -(orig.v(w, t) + du.v(w, t)), 0.5 * rho);
      }
  }
  return b.freeze();
}

DispatchPlan extract_dispatch_plan(const QpProblem& problem, const QpSolution& solution) {
  if (solution.status != SolveStatus::Optimal)
    throw Error("extract_dispatch_plan: solution is not optimal");
  DispatchPlan plan;
  int N = 0;
  while (problem.has_col(key("mv", "Pdisp", -1, N))) ++N;
  plan.p_disp.resize(N);
  plan.q_disp.resize(N);
  for (int t = 0; t < N; ++t) {
    plan.p_disp(t) = solution.primal(problem.col(key("mv", "Pdisp", -1, t)));
    plan.q_disp(t) = solution.primal(problem.col(key("mv", "Qdisp", -1, t)));
  }
  for (const auto& k : problem.column_keys) {
    if (k.symbol == "ppcc" && k.entity.rfind("lv:", 0) == 0) {
      const std::string name = k.entity.substr(3);
      if (plan.lv_p_pcc.count(name)) continue;
      int nt = 0;
      while (problem.has_col(key(k.entity, "ppcc", -1, nt))) ++nt;
      Eigen::VectorXd p(nt), q(nt);
      for (int t = 0; t < nt; ++t) {
        p(t) = solution.primal(problem.col(key(k.entity, "ppcc", -1, t)));
        q(t) = solution.primal(problem.col(key(k.entity, "qpcc", -1, t)));
      }
      plan.lv_p_pcc[name] = p;
      plan.lv_q_pcc[name] = q;
    }
  }
  return plan;
}

SolutionBundle extract_bundle(const MultiGridCase& cs, const QpProblem& problem,
                              const QpSolution& solution) {
  SolutionBundle out;
  out.plan = extract_dispatch_plan(problem, solution);
  out.objective = solution.objective;
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  if (problem.has_col(key("mv", "P0", 0, 0))) {
    out.mv_p0.resize(W, N);
    out.mv_q0.resize(W, N);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        out.mv_p0(w, t) = solution.primal(problem.col(key("mv", "P0", w, t)));
        out.mv_q0(w, t) = solution.primal(problem.col(key("mv", "Q0", w, t)));
      }
  }
  for (const auto& lv : cs.lvs) {
    if (!problem.has_col(key("lv:" + lv.name, "p0", 0, 0))) continue;
    Eigen::MatrixXd p(W, N), q(W, N);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        p(w, t) = solution.primal(problem.col(key("lv:" + lv.name, "p0", w, t)));
        q(w, t) = solution.primal(problem.col(key("lv:" + lv.name, "q0", w, t)));
      }
    out.lv_p0[lv.name] = p;
    out.lv_q0[lv.name] = q;
  }
  auto collect_res = [&](const BessParams& res) {
    if (!problem.has_col(key("res:" + res.id, "soc", 0, 0))) return;
    ResourceProfile prof;
    prof.resource_id = res.id;
    prof.p.resize(W, N);
    prof.q.resize(W, N);
    Eigen::MatrixXd soc(W, N);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        prof.p(w, t) = solution.primal(problem.col(key("res:" + res.id, "p", w, t)));
        prof.q(w, t) = solution.primal(problem.col(key("res:" + res.id, "q", w, t)));
        soc(w, t) = solution.primal(problem.col(key("res:" + res.id, "soc", w, t)));
      }
    out.resource_profiles[res.id] = prof;
    out.resource_soc[res.id] = soc;
  };
  for (const auto& res : cs.mv.resources) collect_res(res);
  for (const auto& lv : cs.lvs)
    for (const auto& res : lv.resources) collect_res(res);
  return out;
}

void save_dispatch_csv(const Eigen::VectorXd& p_pu, const Eigen::VectorXd& q_pu,
                       double base_power_va, const std::string& path) {
  std::ofstream out(path);
  out.precision(12);
  out << "t,p_disp_kw,q_disp_kvar\n";
  for (int t = 0; t < p_pu.size(); ++t)
    out << t << ',' << p_pu(t) * base_power_va / 1e3 << ','
        << q_pu(t) * base_power_va / 1e3 << '\n';
}

}  // namespace mgdispatch

#include "mgdispatch/admm.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>

namespace mgdispatch {

namespace {

using nlohmann::json;

double series_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() == 0 && b.size() == 0) return 0.0;
  return (a - b).squaredNorm();
}

double agent_gap(const BoundarySeries& a, const BoundarySeries& b) {
  double sq = series_sq(a.p, b.p) + series_sq(a.q, b.q);
  if (a.v.size() > 0) sq += series_sq(a.v, b.v);
  return std::sqrt(sq);
}

}  // namespace

std::pair<double, double> compute_residuals(const CouplingVars& originals,
                                            const CouplingVars& copies,
                                            const CouplingVars& prev_copies,
                                            bool rho_scaled_dual, double rho) {
  double s_pri = 0.0, s_dual = 0.0;
  for (const auto& [id, orig] : originals.mvccr) {
    s_pri += agent_gap(orig, copies.mvccr.at(id));
    s_dual += agent_gap(copies.mvccr.at(id), prev_copies.mvccr.at(id));
  }
  for (const auto& [name, orig] : originals.lv) {
    s_pri += agent_gap(orig, copies.lv.at(name));
    s_dual += agent_gap(copies.lv.at(name), prev_copies.lv.at(name));
  }
  if (rho_scaled_dual) s_dual *= rho;
  return {s_pri, s_dual};
}

int coupling_dimension(const CouplingVars& vars) {
  int dim = 0;
  for (const auto& [id, s] : vars.mvccr)
    dim += static_cast<int>(s.p.size() + s.q.size() + s.v.size());
  for (const auto& [name, s] : vars.lv)
    dim += static_cast<int>(s.p.size() + s.q.size() + s.v.size());
  return dim;
}

double coupling_norm(const CouplingVars& vars) {
  double sq = 0.0;
  for (const auto& [id, s] : vars.mvccr)
    sq += s.p.squaredNorm() + s.q.squaredNorm() + s.v.squaredNorm();
  for (const auto& [name, s] : vars.lv)
    sq += s.p.squaredNorm() + s.q.squaredNorm() + s.v.squaredNorm();
  return std::sqrt(sq);
}

ConvergenceCheck check_convergence(const AdmmState& state, const AdmmConfig& cfg,
                                   double s_pri, double s_dual) {
  ConvergenceCheck out;
  const double sqrt_dim = std::sqrt(static_cast<double>(coupling_dimension(state.originals)));
  out.eps_pri = sqrt_dim * cfg.eps_abs +
                cfg.eps_rel * std::max(coupling_norm(state.originals),
                                       coupling_norm(state.copies));
  out.eps_dual =
      sqrt_dim * cfg.eps_abs + cfg.eps_rel * state.rho * coupling_norm(state.duals);
  out.converged = s_pri <= out.eps_pri && s_dual <= out.eps_dual;
  return out;
}

double adapt_rho(AdmmState& state, double s_pri, double s_dual, double mu,
                 double tau_inc, double tau_dec) {
  double rho_new = state.rho;
  if (s_pri > mu * s_dual)
    rho_new = state.rho * tau_inc;
  else if (s_dual > mu * s_pri)
    rho_new = state.rho / tau_dec;
  if (rho_new != state.rho) {
    const double scale = state.rho / rho_new;
    auto rescale = [&](std::map<std::string, BoundarySeries>& m) {
      for (auto& [k, s] : m) {
        s.p *= scale;
        s.q *= scale;
        if (s.v.size() > 0) s.v *= scale;
      }
    };
    rescale(state.duals.mvccr);
    rescale(state.duals.lv);
    state.rho = rho_new;
  }
  return state.rho;
}

namespace {

VarKey vk(const std::string& entity, const std::string& symbol, int w, int t) {
  return VarKey{entity, symbol, w, t};
}

// One ADMM participant: a cached problem/solver pair whose penalty offsets are
// folded into the linear cost between iterations.
struct Agent {
  QpProblem prob;
  Eigen::VectorXd q_base;
  double c_base = 0.0;
  std::unique_ptr<QpSolver> solver;
  Eigen::VectorXd x;
  QpSolution last;

  void reset(QpProblem p, const QpSettings& settings) {
    prob = std::move(p);
    q_base = prob.linear;
    c_base = prob.constant;
    solver = std::make_unique<QpSolver>(prob, settings);
  }

  QpSolution solve() {
    last = x.size() > 0 ? solver->solve(x) : solver->solve();
    if (last.status == SolveStatus::Infeasible)
      throw Error("coordination subproblem reported infeasible");
    x = last.primal;
    return last;
  }
};

Eigen::MatrixXd read_series(const QpProblem& prob, const Eigen::VectorXd& x,
                            const std::string& entity, const std::string& symbol, int W,
                            int N) {
  Eigen::MatrixXd out(W, N);
  for (int w = 0; w < W; ++w)
    for (int t = 0; t < N; ++t) out(w, t) = x(prob.col(vk(entity, symbol, w, t)));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

}  // namespace

AdmmResult run_admm(const MultiGridCase& cs, const AdmmConfig& cfg) {
  if (cfg.rho0 <= 0.0) throw Error("run_admm: rho0 must be positive");
  const int W = cs.n_scenarios();
  const int N = cs.horizon();
  const int L = static_cast<int>(cs.lvs.size());
  const int R = static_cast<int>(cs.mv.resources.size());

  AdmmResult result;
  AdmmState& st = result.state;
  st.rho = cfg.rho0;

  // Initial originals: the no-control boundary flows (on the MV base), or
  // zero when requested. Copies start at the originals; duals at zero.
  for (int l = 0; l < L; ++l) {
    const auto& lv = cs.lvs[l];
    BoundarySeries s = zero_boundary(W, N, /*with_v=*/true);
    if (!cfg.zero_init) {
      const double ratio = cs.lv_base_ratio(l);
      s.p = ratio * cs.lv_models[l].pcc_p0;
      s.q = ratio * cs.lv_models[l].pcc_q0;
      s.v = cs.lv_models[l].pcc_v0;
    } else {
      s.v.setOnes();
    }
    st.originals.lv[lv.name] = s;
    st.copies.lv[lv.name] = s;
    st.duals.lv[lv.name] = zero_boundary(W, N, true);
  }
  for (const auto& res : cs.mv.resources) {
    BoundarySeries s = zero_boundary(W, N, /*with_v=*/false);
    st.originals.mvccr[res.id] = s;
    st.copies.mvccr[res.id] = s;
    st.duals.mvccr[res.id] = zero_boundary(W, N, false);
  }

  // Agents. Problems are built once per penalty weight with zero offsets;
  // iterations only touch the linear cost.
  std::vector<Agent> lv_agents(L);
  std::vector<Agent> res_agents(R);
  Agent agg;
  const BoundarySeries zero_lv = zero_boundary(W, N, true);
  const BoundarySeries zero_res = zero_boundary(W, N, false);

  auto rebuild_agents = [&]() {
    for (int l = 0; l < L; ++l)
      lv_agents[l].reset(build_lv_subproblem(cs, l, zero_lv, zero_lv, st.rho, cfg.build),
                         cfg.qp);
    for (int r = 0; r < R; ++r)
      res_agents[r].reset(
          build_mvccr_subproblem(cs, r, zero_res, zero_res, st.rho, cfg.build), cfg.qp);
    CouplingVars zeros;
    for (const auto& lv : cs.lvs) zeros.lv[lv.name] = zero_lv;
    for (const auto& res : cs.mv.resources) zeros.mvccr[res.id] = zero_res;
    agg.reset(build_aggregator_problem(cs, zeros, zeros, st.rho, cfg.build), cfg.qp);
  };
  rebuild_agents();

  // Applies linear-cost deltas of 0.5*rho*(c'x + offset)^2 terms: the base
  // problem was built with offset 0, so only rho*offset*c lands on x.
  auto lv_linear = [&](int l) {
    Agent& a = lv_agents[l];
    Eigen::VectorXd q = a.q_base;
    double c0 = a.c_base;
    const auto& lv = cs.lvs[l];
    const double ratio = cs.lv_base_ratio(l);
    const auto& z = st.copies.lv.at(lv.name);
    const auto& u = st.duals.lv.at(lv.name);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        const double cp = z.p(w, t) - u.p(w, t);
        const double cq = z.q(w, t) - u.q(w, t);
        const double cv = z.v(w, t) - u.v(w, t);
        q(a.prob.col(vk("lv:" + lv.name, "p0", w, t))) -= st.rho * ratio * cp;
        q(a.prob.col(vk("lv:" + lv.name, "q0", w, t))) -= st.rho * ratio * cq;
        q(a.prob.col(vk("lv:" + lv.name, "v0", w, t))) -= st.rho * cv;
        c0 += 0.5 * st.rho * (cp * cp + cq * cq + cv * cv);
      }
    a.solver->update_linear_cost(q, c0);
  };
  auto res_linear = [&](int r) {
    Agent& a = res_agents[r];
    Eigen::VectorXd q = a.q_base;
    double c0 = a.c_base;
    const auto& res = cs.mv.resources[r];
    const auto& z = st.copies.mvccr.at(res.id);
    const auto& u = st.duals.mvccr.at(res.id);
    for (int w = 0; w < W; ++w)
      for (int t = 0; t < N; ++t) {
        const double cp = z.p(w, t) - u.p(w, t);
        const double cq = z.q(w, t) - u.q(w, t);
        q(a.prob.col(vk("res:" + res.id, "p", w, t))) -= st.rho * cp;
        q(a.prob.col(vk("res:" + res.id, "q", w, t))) -= st.rho * cq;
        c0 += 0.5 * st.rho * (cp * cp + cq * cq);
      }
    a.solver->update_linear_cost(q, c0);
  };
  auto agg_linear = [&]() {
    Eigen::VectorXd q = agg.q_base;
    double c0 = agg.c_base;
    for (const auto& res : cs.mv.resources) {
      const auto& o = st.originals.mvccr.at(res.id);
      const auto& u = st.duals.mvccr.at(res.id);
      for (int w = 0; w < W; ++w)
        for (int t = 0; t < N; ++t) {
          const double dp = o.p(w, t) + u.p(w, t);
          const double dq = o.q(w, t) + u.q(w, t);
          q(agg.prob.col(vk("res:" + res.id, "p", w, t))) -= st.rho * dp;
          q(agg.prob.col(vk("res:" + res.id, "q", w, t))) -= st.rho * dq;
          c0 += 0.5 * st.rho * (dp * dp + dq * dq);
        }
    }
    for (const auto& lv : cs.lvs) {
      const auto& o = st.originals.lv.at(lv.name);
      const auto& u = st.duals.lv.at(lv.name);
      for (int w = 0; w < W; ++w)
        for (int t = 0; t < N; ++t) {
          const double dp = o.p(w, t) + u.p(w, t);
          const double dq = o.q(w, t) + u.q(w, t);
          const double dv = o.v(w, t) + u.v(w, t);
          q(agg.prob.col(vk("lvpcc:" + lv.name, "P", w, t))) -= st.rho * dp;
          q(agg.prob.col(vk("lvpcc:" + lv.name, "Q", w, t))) -= st.rho * dq;
          q(agg.prob.col(vk("lvpcc:" + lv.name, "V", w, t))) -= st.rho * dv;
          c0 += 0.5 * st.rho * (dp * dp + dq * dq + dv * dv);
        }
    }
    agg.solver->update_linear_cost(q, c0);
  };

  bool converged = false;
  for (int k = 0; k < cfg.max_iter && !converged; ++k) {
    st.iteration = k + 1;
    // Step 1: original-side agents solve against the latest copies/duals.
    for (int l = 0; l < L; ++l) {
      lv_linear(l);
      lv_agents[l].solve();
      const auto& lv = cs.lvs[l];
      const double ratio = cs.lv_base_ratio(l);
      auto& o = st.originals.lv.at(lv.name);
      o.p = ratio * read_series(lv_agents[l].prob, lv_agents[l].x, "lv:" + lv.name, "p0", W, N);
      o.q = ratio * read_series(lv_agents[l].prob, lv_agents[l].x, "lv:" + lv.name, "q0", W, N);
      o.v = read_series(lv_agents[l].prob, lv_agents[l].x, "lv:" + lv.name, "v0", W, N);
      AgentMessage msg{"lv:" + lv.name, k, "originals", {}};
      msg.fields["p"] = o.p;
      msg.fields["q"] = o.q;
      msg.fields["v"] = o.v;
      result.trace.messages.push_back(std::move(msg));
    }
    for (int r = 0; r < R; ++r) {
      res_linear(r);
      res_agents[r].solve();
      const auto& res = cs.mv.resources[r];
      auto& o = st.originals.mvccr.at(res.id);
      o.p = read_series(res_agents[r].prob, res_agents[r].x, "res:" + res.id, "p", W, N);
      o.q = read_series(res_agents[r].prob, res_agents[r].x, "res:" + res.id, "q", W, N);
      AgentMessage msg{"mvccr:" + res.id, k, "originals", {}};
      msg.fields["p"] = o.p;
      msg.fields["q"] = o.q;
      result.trace.messages.push_back(std::move(msg));
    }

    // Step 2: the aggregator refreshes the copies.
    CouplingVars prev_copies = st.copies;
    agg_linear();
    agg.solve();
    for (const auto& res : cs.mv.resources) {
      auto& z = st.copies.mvccr.at(res.id);
      z.p = read_series(agg.prob, agg.x, "res:" + res.id, "p", W, N);
      z.q = read_series(agg.prob, agg.x, "res:" + res.id, "q", W, N);
    }
    for (const auto& lv : cs.lvs) {
      auto& z = st.copies.lv.at(lv.name);
      z.p = read_series(agg.prob, agg.x, "lvpcc:" + lv.name, "P", W, N);
      z.q = read_series(agg.prob, agg.x, "lvpcc:" + lv.name, "Q", W, N);
      z.v = read_series(agg.prob, agg.x, "lvpcc:" + lv.name, "V", W, N);
    }

    // Step 3: scaled dual ascent, u += original - copy.
    auto dual_step = [](BoundarySeries& u, const BoundarySeries& o,
                        const BoundarySeries& z) {
      u.p += o.p - z.p;
      u.q += o.q - z.q;
      if (u.v.size() > 0) u.v += o.v - z.v;
    };
    for (const auto& res : cs.mv.resources)
      dual_step(st.duals.mvccr.at(res.id), st.originals.mvccr.at(res.id),
                st.copies.mvccr.at(res.id));
    for (const auto& lv : cs.lvs)
      dual_step(st.duals.lv.at(lv.name), st.originals.lv.at(lv.name),
                st.copies.lv.at(lv.name));
    // One broadcast from the aggregator per iteration; field names are
    // namespaced per counterparty.
    {
      AgentMessage msg{"aggregator", k, "copies_duals", {}};
      for (const auto& res : cs.mv.resources) {
        const std::string pre = "mvccr:" + res.id + ".";
        msg.fields[pre + "p"] = st.copies.mvccr.at(res.id).p;
        msg.fields[pre + "q"] = st.copies.mvccr.at(res.id).q;
        msg.fields[pre + "u_p"] = st.duals.mvccr.at(res.id).p;
        msg.fields[pre + "u_q"] = st.duals.mvccr.at(res.id).q;
      }
      for (const auto& lv : cs.lvs) {
        const std::string pre = "lv:" + lv.name + ".";
        msg.fields[pre + "p"] = st.copies.lv.at(lv.name).p;
        msg.fields[pre + "q"] = st.copies.lv.at(lv.name).q;
        msg.fields[pre + "v"] = st.copies.lv.at(lv.name).v;
        msg.fields[pre + "u_p"] = st.duals.lv.at(lv.name).p;
        msg.fields[pre + "u_q"] = st.duals.lv.at(lv.name).q;
        msg.fields[pre + "u_v"] = st.duals.lv.at(lv.name).v;
      }
      result.trace.messages.push_back(std::move(msg));
    }

    // Step 4: residuals, convergence, penalty adaptation.
    auto [s_pri, s_dual] = compute_residuals(st.originals, st.copies, prev_copies,
                                             cfg.rho_scaled_dual_residual, st.rho);
    const auto check = check_convergence(st, cfg, s_pri, s_dual);
    ResidualRecord rec{k, s_pri, s_dual, check.eps_pri, check.eps_dual, st.rho};
    st.history.push_back(rec);
    result.trace.residuals.push_back(rec);
    if (check.converged) {
      converged = true;
      break;
    }
    const double rho_before = st.rho;
    adapt_rho(st, s_pri, s_dual, cfg.mu, cfg.tau_inc, cfg.tau_dec);
    if (st.rho != rho_before) rebuild_agents();
  }
  result.converged = converged;

  // Assemble the plan and the realized series across the agents.
  if (agg.last.status != SolveStatus::Optimal)
    throw Error("run_admm: final aggregator solve is not optimal");
  result.plan = extract_dispatch_plan(agg.prob, agg.last);
  result.bundle.plan = result.plan;
  result.bundle.mv_p0.resize(W, N);
  result.bundle.mv_q0.resize(W, N);
  result.bundle.mv_p0 = read_series(agg.prob, agg.x, "mv", "P0", W, N);
  result.bundle.mv_q0 = read_series(agg.prob, agg.x, "mv", "Q0", W, N);
  double objective = agg.last.objective;
  // Strip the penalty parts so the reported objective matches the
  // coordination-free cost at the final iterate.
  for (const auto& res : cs.mv.resources) {
    const auto& o = st.originals.mvccr.at(res.id);
    const auto& z = st.copies.mvccr.at(res.id);
    const auto& u = st.duals.mvccr.at(res.id);
    objective -= 0.5 * st.rho *
                 ((o.p - z.p + u.p).squaredNorm() + (o.q - z.q + u.q).squaredNorm());
  }
  for (const auto& lv : cs.lvs) {
    const auto& o = st.originals.lv.at(lv.name);
    const auto& z = st.copies.lv.at(lv.name);
    const auto& u = st.duals.lv.at(lv.name);
    objective -= 0.5 * st.rho *
                 ((o.p - z.p + u.p).squaredNorm() + (o.q - z.q + u.q).squaredNorm() +
                  (o.v - z.v + u.v).squaredNorm());
  }
  for (int l = 0; l < L; ++l) {
    Agent& a = lv_agents[l];
    if (a.last.status != SolveStatus::Optimal)
      throw Error("run_admm: final LV solve is not optimal");
    const auto& lv = cs.lvs[l];
    const std::string ent = "lv:" + lv.name;
    Eigen::VectorXd ppcc(N), qpcc(N);
    for (int t = 0; t < N; ++t) {
      ppcc(t) = a.x(a.prob.col(vk(ent, "ppcc", -1, t)));
      qpcc(t) = a.x(a.prob.col(vk(ent, "qpcc", -1, t)));
    }
    result.plan.lv_p_pcc[lv.name] = ppcc;
    result.plan.lv_q_pcc[lv.name] = qpcc;
    result.bundle.lv_p0[lv.name] = read_series(a.prob, a.x, ent, "p0", W, N);
    result.bundle.lv_q0[lv.name] = read_series(a.prob, a.x, ent, "q0", W, N);
    // LV agent objective minus its own penalty.
    const auto& o = st.originals.lv.at(lv.name);
    const auto& z = st.copies.lv.at(lv.name);
    const auto& u = st.duals.lv.at(lv.name);
    objective += a.last.objective -
                 0.5 * st.rho *
                     ((o.p - z.p + u.p).squaredNorm() + (o.q - z.q + u.q).squaredNorm() +
                      (o.v - z.v + u.v).squaredNorm());
    for (const auto& res : lv.resources) {
      ResourceProfile prof;
      prof.resource_id = res.id;
      prof.p = read_series(a.prob, a.x, "res:" + res.id, "p", W, N);
      prof.q = read_series(a.prob, a.x, "res:" + res.id, "q", W, N);
      result.bundle.resource_profiles[res.id] = prof;
      result.bundle.resource_soc[res.id] =
          read_series(a.prob, a.x, "res:" + res.id, "soc", W, N);
    }
  }
  for (int r = 0; r < R; ++r) {
    Agent& a = res_agents[r];
    if (a.last.status != SolveStatus::Optimal)
      throw Error("run_admm: final resource solve is not optimal");
    const auto& res = cs.mv.resources[r];
    ResourceProfile prof;
    prof.resource_id = res.id;
    prof.p = st.originals.mvccr.at(res.id).p;
    prof.q = st.originals.mvccr.at(res.id).q;
    result.bundle.resource_profiles[res.id] = prof;
    result.bundle.resource_soc[res.id] =
        read_series(a.prob, a.x, "res:" + res.id, "soc", W, N);
    const auto& o = st.originals.mvccr.at(res.id);
    const auto& z = st.copies.mvccr.at(res.id);
    const auto& u = st.duals.mvccr.at(res.id);
    objective += a.last.objective -
                 0.5 * st.rho *
                     ((o.p - z.p + u.p).squaredNorm() + (o.q - z.q + u.q).squaredNorm());
  }
  result.bundle.objective = objective;
  result.plan.p_disp = result.bundle.plan.p_disp;
  result.bundle.plan = result.plan;
  return result;
}

void save_trace(const AdmmTrace& trace, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  for (const auto& m : trace.messages) {
    json j{{"kind", "message"},
           {"sender", m.sender},
           {"k", m.k},
           {"type", m.type},
           {"fields", json::object()}};
    for (const auto& [name, mat] : m.fields) j["fields"][name] = matrix_to_json(mat);
    out << j.dump() << '\n';
  }
  for (const auto& r : trace.residuals) {
    json j{{"kind", "residual"}, {"k", r.k},       {"s_pri", r.s_pri},
           {"s_dual", r.s_dual}, {"eps_pri", r.eps_pri}, {"eps_dual", r.eps_dual},
           {"rho", r.rho}};
    out << j.dump() << '\n';
  }
}

AdmmTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path);
  AdmmTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "message") {
      AgentMessage m;
      m.sender = j.at("sender").get<std::string>();
      m.k = j.at("k").get<int>();
      m.type = j.at("type").get<std::string>();
      for (auto& [name, val] : j.at("fields").items())
        m.fields[name] = matrix_from_json(val);
      trace.messages.push_back(std::move(m));
    } else if (kind == "residual") {
      ResidualRecord r;
      r.k = j.at("k").get<int>();
      r.s_pri = j.at("s_pri").get<double>();
      r.s_dual = j.at("s_dual").get<double>();
      r.eps_pri = j.at("eps_pri").get<double>();
      r.eps_dual = j.at("eps_dual").get<double>();
      r.rho = j.at("rho").get<double>();
      trace.residuals.push_back(r);
    } else {
      throw SchemaError("unknown trace record kind: " + kind);
    }
  }
  return trace;
}

PrivacyReport audit_privacy(const AdmmTrace& trace) {
  // Only boundary series and their duals may cross agent boundaries. Grid
  // parameters, internal states, scenario data or cost terms must not appear.
  // Aggregator fields are namespaced "<counterparty>.<field>".
  static const std::set<std::string> allowed = {"p", "q", "v", "u_p", "u_q", "u_v"};
  PrivacyReport report;
  report.message_count = static_cast<int>(trace.messages.size());
  for (const auto& m : trace.messages) {
    if (m.type != "originals" && m.type != "copies_duals" && m.type != "converged") {
      report.leaks.push_back(m.sender + " k=" + std::to_string(m.k) +
                             " type=" + m.type);
      continue;
    }
    for (const auto& [name, mat] : m.fields) {
      (void)mat;
      const auto dot = name.rfind('.');
      const std::string base = dot == std::string::npos ? name : name.substr(dot + 1);
      if (!allowed.count(base))
        report.leaks.push_back(m.sender + " k=" + std::to_string(m.k) +
                               " field=" + name);
    }
  }
  report.pass = report.leaks.empty();
  return report;
}

}  // namespace mgdispatch

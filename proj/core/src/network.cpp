#include "mgdispatch/network.hpp"

#include <Eigen/LU>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mgdispatch {

namespace {

std::vector<std::vector<int>> adjacency(const NetworkModel& model) {
  std::vector<std::vector<int>> adj(model.n_buses);
  for (const auto& br : model.branches) {
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  return adj;
}

bool connected(const NetworkModel& model) {
  if (model.n_buses == 0) return false;
  auto adj = adjacency(model);
  std::vector<bool> seen(model.n_buses, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
  }
  for (bool s : seen)
    if (!s) return false;
  return true;
}

}  // namespace

void NetworkModel::validate() const {
  if (n_buses < 2) throw SchemaError("grid '" + name + "': need at least 2 buses");
  if (base_power_va <= 0 || base_voltage_v <= 0)
    throw SchemaError("grid '" + name + "': per-unit bases must be positive");
  if (!(v_min < 1.0 && 1.0 < v_max))
    throw SchemaError("grid '" + name + "': voltage bounds must bracket 1.0 pu");
  if (cos_theta_min <= 0.0 || cos_theta_min > 1.0)
    throw SchemaError("grid '" + name + "': cos_theta_min must be in (0, 1]");
  for (const auto& br : branches) {
    if (br.from < 0 || br.from >= n_buses || br.to < 0 || br.to >= n_buses ||
        br.from == br.to)
      throw SchemaError("grid '" + name + "': branch endpoints out of range");
    if (std::abs(br.series_impedance) == 0.0)
      throw SchemaError("grid '" + name + "': branch with zero series impedance");
    if (br.ampacity <= 0.0)
      throw SchemaError("grid '" + name + "': branch ampacity must be positive");
  }
  if (!connected(*this)) throw SchemaError("grid '" + name + "': graph is not connected");
  for (const auto& res : resources) res.validate();
}

Eigen::MatrixXcd build_admittance(const NetworkModel& model) {
  model.validate();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(model.n_buses, model.n_buses);
  for (const auto& br : model.branches) {
    const Complex y_series = 1.0 / br.series_impedance;
    const Complex y_half = br.shunt_admittance_total * 0.5;
    y(br.from, br.from) += y_series + y_half;
    y(br.to, br.to) += y_series + y_half;
    y(br.from, br.to) -= y_series;
    y(br.to, br.from) -= y_series;
  }
  return y;
}

GridState solve_ac_power_flow(const NetworkModel& model,
                              const ComplexVector& nodal_injections,
                              Complex slack_voltage, double tol, int max_iter) {
  const int nb = model.n_nonslack();
  if (nodal_injections.size() != nb)
    throw DimensionMismatch("injection vector size " +
                            std::to_string(nodal_injections.size()) + " != " +
                            std::to_string(nb) + " non-slack buses of '" + model.name + "'");
  if (!nodal_injections.allFinite()) throw SchemaError("non-finite nodal injection");
  const double vs = std::abs(slack_voltage);
  if (vs <= 0.5 || vs >= 1.5) throw SchemaError("slack voltage magnitude out of range");

  const Eigen::MatrixXcd y = build_admittance(model);

  // Flat start from the slack voltage.
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(model.n_buses, std::arg(slack_voltage));
  Eigen::VectorXd vmag = Eigen::VectorXd::Constant(model.n_buses, vs);

  auto injections = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& vm) {
    ComplexVector v(model.n_buses);
    for (int i = 0; i < model.n_buses; ++i) v(i) = std::polar(vm(i), th(i));
    ComplexVector s = v.array() * (y * v).conjugate().array();
    return std::pair{v, s};
  };

  double mismatch_norm = 0.0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    auto [v, s] = injections(theta, vmag);
    Eigen::VectorXd mismatch(2 * nb);
    for (int i = 0; i < nb; ++i) {
      mismatch(i) = nodal_injections(i).real() - s(i + 1).real();
      mismatch(nb + i) = nodal_injections(i).imag() - s(i + 1).imag();
    }
    mismatch_norm = mismatch.lpNorm<Eigen::Infinity>();
    if (mismatch_norm <= tol) break;

    // Polar Jacobian over non-slack buses: d(P,Q)/d(theta, |V|).
    Eigen::MatrixXd jac(2 * nb, 2 * nb);
    for (int i = 0; i < nb; ++i) {
      const int bi = i + 1;
      for (int j = 0; j < nb; ++j) {
        const int bj = j + 1;
        const Complex yij = y(bi, bj);
        const double g = yij.real(), b = yij.imag();
        const double dth = theta(bi) - theta(bj);
        const double ct = std::cos(dth), st = std::sin(dth);
        if (bi == bj) {
          const double p = s(bi).real(), q = s(bi).imag();
          const double vi = vmag(bi);
          jac(i, j) = -q - b * vi * vi;                 // dP/dtheta
          jac(i, nb + j) = p / vi + g * vi;             // dP/d|V|
          jac(nb + i, j) = p - g * vi * vi;             // dQ/dtheta
          jac(nb + i, nb + j) = q / vi - b * vi;        // dQ/d|V|
        } else {
          const double vi = vmag(bi), vj = vmag(bj);
          jac(i, j) = vi * vj * (g * st - b * ct);
          jac(i, nb + j) = vi * (g * ct + b * st);
          jac(nb + i, j) = -vi * vj * (g * ct + b * st);
          jac(nb + i, nb + j) = vi * (g * st - b * ct);
        }
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    Eigen::VectorXd step = lu.solve(mismatch);
    if (!step.allFinite()) throw NonConvergence(iter, mismatch_norm);
    for (int i = 0; i < nb; ++i) {
      theta(i + 1) += step(i);
      vmag(i + 1) += step(nb + i);
      if (vmag(i + 1) <= 1e-3) throw NonConvergence(iter, mismatch_norm);
    }
  }
  if (mismatch_norm > std::max(tol, 1e-8)) throw NonConvergence(max_iter, mismatch_norm);

  auto [v, s] = injections(theta, vmag);
  GridState state;
  state.bus_voltages = v;
  state.branch_currents.resize(model.n_branches());
  for (int l = 0; l < model.n_branches(); ++l) {
    const auto& br = model.branches[l];
    const Complex y_series = 1.0 / br.series_impedance;
    const Complex y_half = br.shunt_admittance_total * 0.5;
    state.branch_currents(l) =
        y_series * (v(br.from) - v(br.to)) + y_half * v(br.from);
  }
  state.slack_injection = s(0);
  state.total_loss = s.sum();
  return state;
}

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw SchemaError(ctx + ": missing or non-numeric field '" + key + "'");
  return j[key].get<double>();
}

}  // namespace

NetworkModel parse_network(const std::string& json_text, const std::string& name_hint) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("grid file '" + name_hint + "': " + e.what());
  }
  NetworkModel m;
  m.name = j.value("name", name_hint);
  const std::string ctx = "grid '" + m.name + "'";
  m.base_power_va = require_number(j, "base_power_va", ctx);
  m.base_voltage_v = require_number(j, "base_voltage_v", ctx);
  m.v_min = require_number(j, "v_min", ctx);
  m.v_max = require_number(j, "v_max", ctx);
  m.cos_theta_min = require_number(j, "cos_theta_min", ctx);
  if (!j.contains("buses") || !j["buses"].is_array() || j["buses"].empty())
    throw SchemaError(ctx + ": missing 'buses' array");
  m.n_buses = static_cast<int>(j["buses"].size());
  for (int i = 0; i < m.n_buses; ++i) {
    if (j["buses"][i].value("id", -1) != i)
      throw SchemaError(ctx + ": bus ids must be contiguous from 0");
  }
  if (!j.contains("branches") || !j["branches"].is_array())
    throw SchemaError(ctx + ": missing 'branches' array");
  for (const auto& bj : j["branches"]) {
    Branch br;
    br.from = static_cast<int>(require_number(bj, "from", ctx));
    br.to = static_cast<int>(require_number(bj, "to", ctx));
    br.series_impedance = {require_number(bj, "r_pu", ctx), require_number(bj, "x_pu", ctx)};
    br.shunt_admittance_total = {0.0, bj.value("b_shunt_pu", 0.0)};
    br.ampacity = require_number(bj, "ampacity_pu", ctx);
    m.branches.push_back(br);
  }
  if (j.contains("pcc_mv_bus")) m.pcc_mv_bus = j["pcc_mv_bus"].get<int>();
  if (j.contains("resources")) {
    for (const auto& rj : j["resources"]) {
      if (rj.value("type", "") != "bess")
        throw SchemaError(ctx + ": unknown resource type '" + rj.value("type", "") + "'");
      BessParams p;
      p.id = rj.value("id", m.name + "_bess" + std::to_string(m.resources.size()));
      p.node = static_cast<int>(require_number(rj, "node", ctx));
      p.s_max = require_number(rj, "s_max_pu", ctx);
      p.e_max_wh = require_number(rj, "e_max_wh", ctx);
      p.soc_init = rj.value("soc_init", 0.5);
      p.margin_a = rj.value("margin_a", 0.1);
      p.base_power_va = m.base_power_va;
      if (p.node <= 0 || p.node >= m.n_buses)
        throw SchemaError(ctx + ": resource node out of range");
      m.resources.push_back(p);
    }
  }
  m.validate();
  return m;
}

NetworkModel load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open grid file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto slash = path.find_last_of('/');
  std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_network(ss.str(), stem);
}

}  // namespace mgdispatch

#include "mgdispatch/linearization.hpp"

#include <Eigen/LU>
#include <filesystem>
#include <fstream>

namespace mgdispatch {

namespace {

Eigen::MatrixXd polar_jacobian(const Eigen::MatrixXcd& y, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& vmag, const ComplexVector& s) {
  const int nb = static_cast<int>(theta.size()) - 1;
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
        jac(i, j) = -q - b * vi * vi;
        jac(i, nb + j) = p / vi + g * vi;
        jac(nb + i, j) = p - g * vi * vi;
        jac(nb + i, nb + j) = q / vi - b * vi;
      } else {
        const double vi = vmag(bi), vj = vmag(bj);
        jac(i, j) = vi * vj * (g * st - b * ct);
        jac(i, nb + j) = vi * (g * ct + b * st);
        jac(nb + i, j) = -vi * vj * (g * ct + b * st);
        jac(nb + i, nb + j) = vi * (g * st - b * ct);
      }
    }
  }
  return jac;
}

}  // namespace

SensitivityCoefficients compute_sensitivity_coefficients(const NetworkModel& model,
                                                         const GridState& state) {
  const int n = model.n_buses;
  const int nb = model.n_nonslack();
  const int nl = model.n_branches();
  const Eigen::MatrixXcd y = build_admittance(model);
  const ComplexVector& v = state.bus_voltages;
  Eigen::VectorXd theta(n), vmag(n);
  for (int i = 0; i < n; ++i) {
    theta(i) = std::arg(v(i));
    vmag(i) = std::abs(v(i));
  }
  const ComplexVector inj = v.array() * (y * v).conjugate().array();

  const Eigen::MatrixXd jac = polar_jacobian(y, theta, vmag, inj);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  if (!lu.isInvertible())
    throw SingularSensitivity("power-flow Jacobian singular at the operating point");
  // Column k of jinv: d(theta, |V|) of non-slack buses w.r.t. P_k; column
  // nb+k w.r.t. Q_k.
  const Eigen::MatrixXd jinv = lu.inverse();

  SensitivityCoefficients sc;
  sc.dv_dp = Eigen::MatrixXd::Zero(n, nb);
  sc.dv_dq = Eigen::MatrixXd::Zero(n, nb);
  sc.di_dp = Eigen::MatrixXd::Zero(nl, nb);
  sc.di_dq = Eigen::MatrixXd::Zero(nl, nb);
  sc.dpd_dp.resize(nb);
  sc.dpd_dq.resize(nb);
  sc.dqd_dp.resize(nb);
  sc.dqd_dq.resize(nb);

  const ComplexVector yv = y * v;
  for (int k = 0; k < 2 * nb; ++k) {
    // Complex bus-voltage perturbation for a unit injection change.
    ComplexVector dv = ComplexVector::Zero(n);
    for (int i = 0; i < nb; ++i) {
      const double dth = jinv(i, k);
      const double dvm = jinv(nb + i, k);
      dv(i + 1) = std::polar(1.0, theta(i + 1)) * Complex(dvm, vmag(i + 1) * dth);
      if (k < nb)
        sc.dv_dp(i + 1, k) = dvm;
      else
        sc.dv_dq(i + 1, k - nb) = dvm;
    }

    const ComplexVector ydv = y * dv;
    Complex dloss = 0.0;
    for (int i = 0; i < n; ++i)
      dloss += dv(i) * std::conj(yv(i)) + v(i) * std::conj(ydv(i));

    Eigen::VectorXd di_mag(nl);
    for (int l = 0; l < nl; ++l) {
      const auto& br = model.branches[l];
      const Complex y_series = 1.0 / br.series_impedance;
      const Complex y_half = br.shunt_admittance_total * 0.5;
      const Complex cur = state.branch_currents(l);
      const Complex dcur = y_series * (dv(br.from) - dv(br.to)) + y_half * dv(br.from);
      const double mag_reg = std::sqrt(std::norm(cur) + kCurrentMagEps * kCurrentMagEps);
      di_mag(l) = (cur.real() * dcur.real() + cur.imag() * dcur.imag()) / mag_reg;
    }

    if (k < nb) {
      sc.di_dp.col(k) = di_mag;
      sc.dpd_dp(k) = dloss.real();
      sc.dqd_dp(k) = dloss.imag();
    } else {
      sc.di_dq.col(k - nb) = di_mag;
      sc.dpd_dq(k - nb) = dloss.real();
      sc.dqd_dq(k - nb) = dloss.imag();
    }
  }
  return sc;
}

Eigen::VectorXd LinearGridModel::eval_voltages(const Eigen::VectorXd& p,
                                               const Eigen::VectorXd& q) const {
  Eigen::VectorXd x(2 * n_nonslack());
  x << p, q;
  return a_v * x + b_v;
}

Eigen::VectorXd LinearGridModel::eval_currents(const Eigen::VectorXd& p,
                                               const Eigen::VectorXd& q) const {
  Eigen::VectorXd x(2 * n_nonslack());
  x << p, q;
  return a_i * x + b_i;
}

Eigen::Vector2d LinearGridModel::eval_losses(const Eigen::VectorXd& p,
                                             const Eigen::VectorXd& q) const {
  Eigen::VectorXd x(2 * n_nonslack());
  x << p, q;
  return a_d * x + b_d;
}

LinearGridModel build_linear_model(const NetworkModel& model, const GridState& state,
                                   int t, int scenario, const Eigen::VectorXd& ctrl_p0,
                                   const Eigen::VectorXd& ctrl_q0) {
  const int nb = model.n_nonslack();
  const int nl = model.n_branches();
  if (ctrl_p0.size() != nb || ctrl_q0.size() != nb)
    throw DimensionMismatch("operating-point controllable injections have wrong size");
  const SensitivityCoefficients sc = compute_sensitivity_coefficients(model, state);

  LinearGridModel lin;
  lin.t = t;
  lin.scenario = scenario;
  lin.slack_voltage_mag = std::abs(state.bus_voltages(0));
  lin.a_v.resize(nb, 2 * nb);
  lin.a_v << sc.dv_dp.bottomRows(nb), sc.dv_dq.bottomRows(nb);
  lin.a_i.resize(nl, 2 * nb);
  lin.a_i << sc.di_dp, sc.di_dq;
  lin.a_d.resize(2, 2 * nb);
  lin.a_d << sc.dpd_dp, sc.dpd_dq, sc.dqd_dp, sc.dqd_dq;

  Eigen::VectorXd x0(2 * nb);
  x0 << ctrl_p0, ctrl_q0;
  lin.b_v = state.bus_voltages.tail(nb).cwiseAbs() - lin.a_v * x0;
  lin.b_i = state.branch_currents.cwiseAbs() - lin.a_i * x0;
  lin.b_d = Eigen::Vector2d(state.total_loss.real(), state.total_loss.imag()) - lin.a_d * x0;
  return lin;
}

LinearGridModel build_linear_model(const NetworkModel& model, const GridState& state,
                                   int t, int scenario) {
  const int nb = model.n_nonslack();
  return build_linear_model(model, state, t, scenario, Eigen::VectorXd::Zero(nb),
                            Eigen::VectorXd::Zero(nb));
}

LinearGridModel shift_slack_voltage(const LinearGridModel& lin, double new_slack_mag) {
  const double delta = new_slack_mag - lin.slack_voltage_mag;
  if (std::abs(delta) > 0.05 + 1e-12)
    throw OutOfLinearRange("slack-voltage shift " + std::to_string(delta) +
                           " exceeds 0.05 pu");
  LinearGridModel out = lin;
  out.b_v.array() += delta;
  out.slack_voltage_mag = new_slack_mag;
  return out;
}

namespace {

void write_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

}  // namespace

void dump_linear_model_csv(const LinearGridModel& lin, const std::string& dir,
                           const std::string& prefix) {
  std::filesystem::create_directories(dir);
  const std::string base = dir + "/" + prefix;
  write_csv(lin.a_v, base + "_a_v.csv");
  write_csv(lin.b_v, base + "_b_v.csv");
  write_csv(lin.a_i, base + "_a_i.csv");
  write_csv(lin.b_i, base + "_b_i.csv");
  write_csv(lin.a_d, base + "_a_d.csv");
  write_csv(lin.b_d, base + "_b_d.csv");
}

}  // namespace mgdispatch

#include "mgdispatch/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

namespace mgdispatch {

namespace {

enum class RowKind { Equality, Box, Ball };

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

struct QpSolver::Impl {
  QpProblem prob;  // unscaled, as given
  QpSettings settings;

  int n = 0, m = 0;
  std::vector<RowKind> row_kind;
  std::vector<int> singleton_col;       // -1 empty, -2 multi, else the column
  std::vector<double> singleton_coeff;
  std::vector<int> row_ball;  // ball index per row, -1 otherwise

  // Ruiz equilibration: P_s = c D P D, A_s = E A D, q_s = c D q.
  Eigen::VectorXd col_scale, row_scale;  // D, E
  double cost_scale = 1.0;               // c
  SparseMat p_s, a_s;
  Eigen::VectorXd q_s, l_s, u_s;
  std::vector<double> ball_radius_s;

  double rho_bar = 0.1;  // current inequality-row penalty
  Eigen::VectorXd rho, rho_inv;

  Eigen::SimplicialLDLT<SparseMat> kkt;
  SparseMat kkt_mat;

  // Scaled iterates, kept across solves for warm starting.
  Eigen::VectorXd xs, zs, ys;
  bool have_iterate = false;

  // Polish factorization cache keyed by the active-set signature.
  std::vector<signed char> polish_signature;
  std::vector<double> polish_ball_dirs;  // flattened active-ball directions
  Eigen::SimplicialLDLT<SparseMat> polish_kkt;
  SparseMat polish_mat;
  std::vector<int> polish_rows;  // active row indices (balls appended as -1-b)
  double polish_reg = 1e-9;
  bool polish_valid = false;

  Impl(const QpProblem& p, QpSettings s) : prob(p), settings(s) {
    n = prob.n;
    m = prob.n_rows();
    row_kind.assign(m, RowKind::Box);
    row_ball.assign(m, -1);
    for (int i = 0; i < m; ++i)
      if (prob.lower(i) == prob.upper(i) && std::isfinite(prob.lower(i)))
        row_kind[i] = RowKind::Equality;
    for (std::size_t b = 0; b < prob.balls.size(); ++b)
      for (int r : prob.balls[b].rows) {
        row_kind[r] = RowKind::Ball;
        row_ball[r] = static_cast<int>(b);
      }
    // Rows with a single coefficient are plain variable bounds: the polish
    // can land on them exactly instead of up to linear-solve accuracy.
    singleton_col.assign(m, -1);
    singleton_coeff.assign(m, 0.0);
    for (int k = 0; k < prob.constraints.outerSize(); ++k)
      for (SparseMat::InnerIterator it(prob.constraints, k); it; ++it) {
        if (singleton_col[it.row()] == -1) {
          singleton_col[it.row()] = static_cast<int>(it.col());
          singleton_coeff[it.row()] = it.value();
        } else {
          singleton_col[it.row()] = -2;  // more than one entry
        }
      }
    equilibrate();
    rho_bar = settings.rho_ineq;
    set_rho(rho_bar);
    factorize();
    xs = Eigen::VectorXd::Zero(n);
    zs = Eigen::VectorXd::Zero(m);
    ys = Eigen::VectorXd::Zero(m);
  }

  // Modified Ruiz equilibration on [P A'; A 0] with rows of one ball forced
  // to share a scale so the ball stays a ball.
  void equilibrate() {
    col_scale = Eigen::VectorXd::Ones(n);
    row_scale = Eigen::VectorXd::Ones(m);
    p_s = prob.quadratic;
    a_s = prob.constraints;
    for (int pass = 0; pass < 10; ++pass) {
      Eigen::VectorXd cnorm = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd rnorm = Eigen::VectorXd::Zero(m);
      for (int k = 0; k < p_s.outerSize(); ++k)
        for (SparseMat::InnerIterator it(p_s, k); it; ++it)
          cnorm(it.col()) = std::max(cnorm(it.col()), std::abs(it.value()));
      for (int k = 0; k < a_s.outerSize(); ++k)
        for (SparseMat::InnerIterator it(a_s, k); it; ++it) {
          cnorm(it.col()) = std::max(cnorm(it.col()), std::abs(it.value()));
          rnorm(it.row()) = std::max(rnorm(it.row()), std::abs(it.value()));
        }
      for (const auto& ball : prob.balls) {
        double mx = 0.0;
        for (int r : ball.rows) mx = std::max(mx, rnorm(r));
        for (int r : ball.rows) rnorm(r) = mx;
      }
      Eigen::VectorXd dc(n), dr(m);
      for (int j = 0; j < n; ++j)
        dc(j) = cnorm(j) > 0 ? clamp(1.0 / std::sqrt(cnorm(j)), 1e-4, 1e4) : 1.0;
      for (int i = 0; i < m; ++i)
        dr(i) = rnorm(i) > 0 ? clamp(1.0 / std::sqrt(rnorm(i)), 1e-4, 1e4) : 1.0;
      p_s = dc.asDiagonal() * p_s * dc.asDiagonal();
      a_s = dr.asDiagonal() * a_s * dc.asDiagonal();
      col_scale.array() *= dc.array();
      row_scale.array() *= dr.array();
    }
    // Cost scaling against the scaled quadratic/linear terms.
    double pmax = 0.0;
    for (int k = 0; k < p_s.outerSize(); ++k)
      for (SparseMat::InnerIterator it(p_s, k); it; ++it)
        pmax = std::max(pmax, std::abs(it.value()));
    const double qmax =
        (col_scale.asDiagonal() * prob.linear).lpNorm<Eigen::Infinity>();
    const double denom = std::max(pmax, qmax);
    cost_scale = denom > 1e-12 ? 1.0 / denom : 1.0;
    p_s *= cost_scale;
    refresh_linear();
    refresh_bounds();
  }

  void refresh_linear() {
    q_s = cost_scale * col_scale.cwiseProduct(prob.linear);
  }
  void refresh_bounds() {
    l_s.resize(m);
    u_s.resize(m);
    for (int i = 0; i < m; ++i) {
      l_s(i) = std::isfinite(prob.lower(i)) ? row_scale(i) * prob.lower(i)
                                            : prob.lower(i);
      u_s(i) = std::isfinite(prob.upper(i)) ? row_scale(i) * prob.upper(i)
                                            : prob.upper(i);
    }
    ball_radius_s.clear();
    for (const auto& ball : prob.balls)
      ball_radius_s.push_back(row_scale(ball.rows.front()) * ball.radius);
  }

  void set_rho(double value) {
    rho.resize(m);
    for (int i = 0; i < m; ++i)
      rho(i) = row_kind[i] == RowKind::Equality ? value * settings.rho_eq_scale : value;
    rho_inv = rho.cwiseInverse();
  }

  void factorize() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(p_s.nonZeros() + 2 * a_s.nonZeros() + n + m);
    for (int k = 0; k < p_s.outerSize(); ++k)
      for (SparseMat::InnerIterator it(p_s, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, settings.sigma);
    for (int k = 0; k < a_s.outerSize(); ++k)
      for (SparseMat::InnerIterator it(a_s, k); it; ++it) {
        trip.emplace_back(n + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (int i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -rho_inv(i));
    kkt_mat.resize(n + m, n + m);
    kkt_mat.setFromTriplets(trip.begin(), trip.end());
    kkt.compute(kkt_mat);
    if (kkt.info() != Eigen::Success)
      throw Error("QP solver: KKT factorization failed");
  }

  // Projection onto the scaled constraint set in z-space.
  void project(Eigen::VectorXd& w) const {
    for (int i = 0; i < m; ++i)
      if (row_kind[i] != RowKind::Ball) w(i) = clamp(w(i), l_s(i), u_s(i));
    for (std::size_t b = 0; b < prob.balls.size(); ++b) {
      const auto& ball = prob.balls[b];
      double nrm2 = 0.0;
      for (int r : ball.rows) nrm2 += w(r) * w(r);
      const double nrm = std::sqrt(nrm2);
      if (nrm > ball_radius_s[b] && nrm > 0.0) {
        const double scale = ball_radius_s[b] / nrm;
        for (int r : ball.rows) w(r) *= scale;
      }
    }
  }

  // ---- Unscaled diagnostics. All take unscaled iterates. ----

  double primal_violation(const Eigen::VectorXd& ax) const {
    double v = 0.0;
    for (int i = 0; i < m; ++i) {
      if (row_kind[i] == RowKind::Ball) continue;
      v = std::max(v, prob.lower(i) - ax(i));
      v = std::max(v, ax(i) - prob.upper(i));
    }
    for (const auto& ball : prob.balls) {
      double nrm2 = 0.0;
      for (int r : ball.rows) nrm2 += ax(r) * ax(r);
      v = std::max(v, std::sqrt(nrm2) - ball.radius);
    }
    return std::max(v, 0.0);
  }

  double complementarity(const Eigen::VectorXd& y, const Eigen::VectorXd& ax) const {
    double c = 0.0;
    for (int i = 0; i < m; ++i) {
      if (row_kind[i] == RowKind::Equality || row_kind[i] == RowKind::Ball) continue;
      if (y(i) > 0.0 && std::isfinite(prob.upper(i)))
        c = std::max(c, std::abs(y(i) * (prob.upper(i) - ax(i))));
      else if (y(i) > 0.0)
        c = std::max(c, y(i));
      if (y(i) < 0.0 && std::isfinite(prob.lower(i)))
        c = std::max(c, std::abs(y(i) * (ax(i) - prob.lower(i))));
      else if (y(i) < 0.0)
        c = std::max(c, -y(i));
    }
    for (const auto& ball : prob.balls) {
      double ny = 0.0, nz = 0.0;
      for (int r : ball.rows) {
        ny += y(r) * y(r);
        nz += ax(r) * ax(r);
      }
      c = std::max(c, std::sqrt(ny) * std::abs(ball.radius - std::sqrt(nz)));
    }
    return c;
  }

  double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& ax) const {
    const double stat =
        (prob.quadratic * x + prob.linear + prob.constraints.transpose() * y)
            .lpNorm<Eigen::Infinity>();
    return std::max({stat, primal_violation(ax), complementarity(y, ax)});
  }

  // Infeasibility certificate test in the scaled space.
  bool detect_infeasible(const Eigen::VectorXd& dy) const {
    const double dn = dy.lpNorm<Eigen::Infinity>();
    if (dn < 1e-12) return false;
    const Eigen::VectorXd d = dy / dn;
    if ((a_s.transpose() * d).lpNorm<Eigen::Infinity>() > 1e-9) return false;
    double support = 0.0;
    for (int i = 0; i < m; ++i) {
      if (row_kind[i] == RowKind::Ball) continue;
      if (d(i) > 0.0) {
        if (!std::isfinite(u_s(i))) return false;
        support += u_s(i) * d(i);
      } else if (d(i) < 0.0) {
        if (!std::isfinite(l_s(i))) return false;
        support += l_s(i) * d(i);
      }
    }
    for (std::size_t b = 0; b < prob.balls.size(); ++b) {
      double nd = 0.0;
      for (int r : prob.balls[b].rows) nd += d(r) * d(r);
      support += ball_radius_s[b] * std::sqrt(nd);
    }
    return support < -1e-9;
  }

  // Solve the equality-constrained KKT system on the detected active set and
  // accept if it improves the (unscaled) KKT residual.
  void try_polish(Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& ax) {
    constexpr double kTolY = 1e-9;
    constexpr double kTolActive = 1e-7;

    std::vector<signed char> sig(m, 0);
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (row_kind[i] == RowKind::Equality) {
        sig[i] = 2;
        active.push_back(i);
      } else if (row_kind[i] == RowKind::Box) {
        if (y(i) < -kTolY) {
          sig[i] = -1;
          active.push_back(i);
        } else if (y(i) > kTolY) {
          sig[i] = 1;
          active.push_back(i);
        } else if (std::isfinite(prob.lower(i)) &&
                   std::abs(ax(i) - prob.lower(i)) < kTolActive) {
          // Weakly active (near-zero multiplier): clamp to the bound and let
          // the residual acceptance test below reject a wrong guess.
          sig[i] = -1;
          active.push_back(i);
        } else if (std::isfinite(prob.upper(i)) &&
                   std::abs(prob.upper(i) - ax(i)) < kTolActive) {
          sig[i] = 1;
          active.push_back(i);
        }
      }
    }
    std::vector<int> active_balls;
    std::vector<double> ball_dirs;
    for (std::size_t b = 0; b < prob.balls.size(); ++b) {
      const auto& ball = prob.balls[b];
      double ny = 0.0, nz = 0.0;
      for (int r : ball.rows) {
        ny += y(r) * y(r);
        nz += ax(r) * ax(r);
      }
      if (std::sqrt(ny) > kTolY && std::sqrt(nz) > 0.5 * ball.radius) {
        active_balls.push_back(static_cast<int>(b));
        const double nrm = std::sqrt(nz);
        for (int r : ball.rows) ball_dirs.push_back(ax(r) / nrm);
      }
    }
    for (int b : active_balls) sig[prob.balls[b].rows.front()] = 3;

    // A single equality solve can guess wrong on weakly active rows; drop the
    // rows whose multiplier comes back with the wrong sign and re-solve.
    for (int round = 0; round < 5; ++round) {
    const int na = static_cast<int>(active.size() + active_balls.size());
    if (na == 0) return;

    const bool same = polish_valid && sig == polish_signature &&
                      ball_dirs == polish_ball_dirs;
    if (!same) {
      std::vector<Eigen::Triplet<double>> base;
      for (int k = 0; k < prob.quadratic.outerSize(); ++k)
        for (SparseMat::InnerIterator it(prob.quadratic, k); it; ++it)
          base.emplace_back(it.row(), it.col(), it.value());
      // Active box/equality rows.
      SparseMat at = prob.constraints.transpose();  // column access per row
      int out_row = 0;
      polish_rows.clear();
      for (int i : active) {
        for (SparseMat::InnerIterator it(at, i); it; ++it) {
          base.emplace_back(n + out_row, it.row(), it.value());
          base.emplace_back(it.row(), n + out_row, it.value());
        }
        polish_rows.push_back(i);
        ++out_row;
      }
      // Active balls: single linearized row along the converged direction.
      std::size_t dir_off = 0;
      for (int b : active_balls) {
        const auto& ball = prob.balls[b];
        for (std::size_t ri = 0; ri < ball.rows.size(); ++ri) {
          const double w = ball_dirs[dir_off + ri];
          for (SparseMat::InnerIterator it(at, ball.rows[ri]); it; ++it) {
            base.emplace_back(n + out_row, it.row(), w * it.value());
            base.emplace_back(it.row(), n + out_row, w * it.value());
          }
        }
        dir_off += ball.rows.size();
        polish_rows.push_back(-1 - b);
        ++out_row;
      }
      // Quasi-definite regularization: without pivoting the factorization can
      // fail on redundant active sets, so escalate until it succeeds. The
      // refinement sweeps below remove the perturbation from the solution.
      polish_valid = false;
      for (double reg : {1e-9, 1e-7, 1e-5}) {
        auto trip = base;
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, reg);
        for (int i = 0; i < na; ++i) trip.emplace_back(n + i, n + i, -reg);
        polish_mat.resize(n + na, n + na);
        polish_mat.setFromTriplets(trip.begin(), trip.end());
        polish_kkt.compute(polish_mat);
        if (polish_kkt.info() == Eigen::Success) {
          polish_reg = reg;
          polish_valid = true;
          break;
        }
      }
      if (!polish_valid) return;
      polish_signature = sig;
      polish_ball_dirs = ball_dirs;
    }

    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -prob.linear;
    for (int i = 0; i < na; ++i) {
      const int r = polish_rows[i];
      if (r >= 0)
        rhs(n + i) = sig[r] == -1 ? prob.lower(r) : prob.upper(r);
      else
        rhs(n + i) = prob.balls[-1 - r].radius;
    }
    Eigen::VectorXd sol = polish_kkt.solve(rhs);
    // Refinement sweeps against the unregularized system.
    for (int sweep = 0; sweep < 10; ++sweep) {
      Eigen::VectorXd resid = rhs - polish_mat * sol;
      for (int i = 0; i < n; ++i) resid(i) += polish_reg * sol(i);
      for (int i = 0; i < na; ++i) resid(n + i) -= polish_reg * sol(n + i);
      if (resid.lpNorm<Eigen::Infinity>() < 1e-13) break;
      sol += polish_kkt.solve(resid);
    }
    if (!sol.allFinite()) return;

    Eigen::VectorXd x_new = sol.head(n);
    // Active singleton rows are plain variable bounds: place the variable on
    // the bound exactly. The acceptance test below rejects a bad snap.
    for (int i : active)
      if (row_kind[i] == RowKind::Box && singleton_col[i] >= 0)
        x_new(singleton_col[i]) =
            (sig[i] == -1 ? prob.lower(i) : prob.upper(i)) / singleton_coeff[i];
    Eigen::VectorXd y_new = Eigen::VectorXd::Zero(m);
    std::size_t dir_pos = 0;
    for (int i = 0; i < na; ++i) {
      const int r = polish_rows[i];
      if (r >= 0) {
        y_new(r) = sol(n + i);
      } else {
        // Distribute the scalar multiplier along the active ball direction.
        const auto& ball = prob.balls[-1 - r];
        for (std::size_t ri = 0; ri < ball.rows.size(); ++ri)
          y_new(ball.rows[ri]) = sol(n + i) * polish_ball_dirs[dir_pos + ri];
        dir_pos += ball.rows.size();
      }
    }

    Eigen::VectorXd ax_new = prob.constraints * x_new;
    // Classic active-set exchange: drop activated box rows whose multiplier
    // contradicts the bound side they were pinned to, pick up rows the new
    // point violates, and re-solve with the revised set.
    std::vector<int> keep;
    bool changed = false;
    for (int i : active) {
      const bool wrong = row_kind[i] == RowKind::Box &&
                         ((sig[i] == -1 && y_new(i) > kTolY) ||
                          (sig[i] == 1 && y_new(i) < -kTolY));
      if (wrong) {
        sig[i] = 0;
        changed = true;
      } else {
        keep.push_back(i);
      }
    }
    for (int i = 0; i < m; ++i) {
      if (row_kind[i] != RowKind::Box || sig[i] != 0) continue;
      if (std::isfinite(prob.lower(i)) && ax_new(i) < prob.lower(i) - 1e-10) {
        sig[i] = -1;
        keep.push_back(i);
        changed = true;
      } else if (std::isfinite(prob.upper(i)) && ax_new(i) > prob.upper(i) + 1e-10) {
        sig[i] = 1;
        keep.push_back(i);
        changed = true;
      }
    }
    // The tangent-plane model of an active ball overshoots the radius to
    // second order; re-linearize around the new point and solve again.
    std::size_t dir_off2 = 0;
    for (int b : active_balls) {
      const auto& ball = prob.balls[b];
      double nrm2 = 0.0;
      for (int r : ball.rows) nrm2 += ax_new(r) * ax_new(r);
      const double nrm = std::sqrt(nrm2);
      if (std::abs(nrm - ball.radius) > 1e-12 && nrm > 0.0) {
        for (std::size_t ri = 0; ri < ball.rows.size(); ++ri)
          ball_dirs[dir_off2 + ri] = ax_new(ball.rows[ri]) / nrm;
        changed = true;
      }
      dir_off2 += ball.rows.size();
    }
    if (changed && round + 1 < 5) {
      std::sort(keep.begin(), keep.end());
      active = std::move(keep);
      continue;
    }

    const double res_old = kkt_residual(x, y, ax);
    if (kkt_residual(x_new, y_new, ax_new) <= res_old + 1e-12) {
      x = x_new;
      y = y_new;
      ax = ax_new;
    }
    return;
    }  // active-set rounds
  }

  QpSolution run(const std::optional<Eigen::VectorXd>& warm) {
    if (warm) {
      xs = warm->cwiseQuotient(col_scale);
      zs = a_s * xs;
      project(zs);
      ys.setZero();
    } else if (!have_iterate) {
      xs.setZero();
      zs.setZero();
      ys.setZero();
      project(zs);
    }

    QpSolution sol;
    const double alpha = settings.alpha;
    Eigen::VectorXd rhs(n + m), w(m), ztil(m), dy(m);
    int iter = 0;
    bool converged = false, infeasible = false;
    for (; iter < settings.max_iter; ++iter) {
      rhs.head(n) = settings.sigma * xs - q_s;
      rhs.tail(m) = zs - rho_inv.cwiseProduct(ys);
      Eigen::VectorXd kx = kkt.solve(rhs);
      const auto xtil = kx.head(n);
      ztil = zs + rho_inv.cwiseProduct(kx.tail(m) - ys);

      xs = alpha * xtil + (1.0 - alpha) * xs;
      w = alpha * ztil + (1.0 - alpha) * zs + rho_inv.cwiseProduct(ys);
      Eigen::VectorXd z_new = w;
      project(z_new);
      dy = rho.cwiseProduct(w - z_new) - ys;
      ys += dy;
      zs = z_new;

      if ((iter + 1) % settings.check_every == 0 || iter + 1 == settings.max_iter) {
        const Eigen::VectorXd x = col_scale.cwiseProduct(xs);
        const Eigen::VectorXd y = row_scale.cwiseProduct(ys) / cost_scale;
        const Eigen::VectorXd ax = prob.constraints * x;
        const Eigen::VectorXd z_un = zs.cwiseQuotient(row_scale);
        const double r_pri = primal_violation(ax);
        const Eigen::VectorXd px = prob.quadratic * x;
        const Eigen::VectorXd aty = prob.constraints.transpose() * y;
        const double r_dual = (px + prob.linear + aty).lpNorm<Eigen::Infinity>();
        const double sc_pri =
            settings.eps * (1.0 + std::max(ax.lpNorm<Eigen::Infinity>(),
                                           z_un.lpNorm<Eigen::Infinity>()));
        const double sc_dual =
            settings.eps * (1.0 + std::max({px.lpNorm<Eigen::Infinity>(),
                                            prob.linear.lpNorm<Eigen::Infinity>(),
                                            aty.lpNorm<Eigen::Infinity>()}));
        if (r_pri <= sc_pri && r_dual <= sc_dual) {
          converged = true;
          ++iter;
          break;
        }
        if (detect_infeasible(dy)) {
          infeasible = true;
          ++iter;
          break;
        }
        // Residual-balancing penalty adaptation.
        if (settings.adaptive_rho && (iter + 1) % settings.adaptive_interval == 0) {
          const Eigen::VectorXd axs = a_s * xs;
          const double rp = (axs - zs).lpNorm<Eigen::Infinity>() /
                            std::max({axs.lpNorm<Eigen::Infinity>(),
                                      zs.lpNorm<Eigen::Infinity>(), 1e-10});
          const Eigen::VectorXd pxs = p_s * xs;
          const Eigen::VectorXd atys = a_s.transpose() * ys;
          const double rd = (pxs + q_s + atys).lpNorm<Eigen::Infinity>() /
                            std::max({pxs.lpNorm<Eigen::Infinity>(),
                                      q_s.lpNorm<Eigen::Infinity>(),
                                      atys.lpNorm<Eigen::Infinity>(), 1e-10});
          const double rho_new =
              clamp(rho_bar * std::sqrt(rp / std::max(rd, 1e-12)), 1e-6, 1e6);
          if (rho_new > 5.0 * rho_bar || rho_new < rho_bar / 5.0) {
            rho_bar = rho_new;
            set_rho(rho_bar);
            factorize();
          }
        }
      }
    }
    have_iterate = true;

    Eigen::VectorXd x = col_scale.cwiseProduct(xs);
    Eigen::VectorXd y = row_scale.cwiseProduct(ys) / cost_scale;
    Eigen::VectorXd ax = prob.constraints * x;
    if (converged && settings.polish) {
      try_polish(x, y, ax);
      // Fold the polished point back into the warm-start iterates.
      xs = x.cwiseQuotient(col_scale);
      ys = cost_scale * y.cwiseQuotient(row_scale);
      zs = a_s * xs;
      project(zs);
    }

    sol.primal = x;
    sol.dual = y;
    sol.iterations = iter;
    sol.max_violation = primal_violation(ax);
    sol.kkt_residual = kkt_residual(x, y, ax);
    sol.objective = prob.objective_value(x);
    if (infeasible) {
      sol.status = SolveStatus::Infeasible;
    } else if (converged && sol.kkt_residual <= settings.eps_kkt) {
      sol.status = SolveStatus::Optimal;
    } else if (converged) {
      // Converged in the splitting metric but polish could not certify the
      // KKT tolerance; report the residual honestly.
      sol.status = sol.kkt_residual <= 10.0 * settings.eps_kkt ? SolveStatus::Optimal
                                                               : SolveStatus::MaxIter;
    } else {
      sol.status = SolveStatus::MaxIter;
    }
    return sol;
  }
};

QpSolver::QpSolver(const QpProblem& problem, QpSettings settings)
    : impl_(std::make_unique<Impl>(problem, settings)) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

void QpSolver::update_linear_cost(const Eigen::VectorXd& q, double constant) {
  if (q.size() != impl_->n) throw DimensionMismatch("update_linear_cost: wrong size");
  impl_->prob.linear = q;
  impl_->prob.constant = constant;
  impl_->refresh_linear();
}

void QpSolver::update_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() != impl_->m || upper.size() != impl_->m)
    throw DimensionMismatch("update_bounds: wrong size");
  impl_->prob.lower = lower;
  impl_->prob.upper = upper;
  impl_->refresh_bounds();
  impl_->polish_valid = false;
}

void QpSolver::update_quadratic(const SparseMat& quadratic) {
  impl_->prob.quadratic = quadratic;
  SparseMat scaled = impl_->col_scale.asDiagonal() * quadratic;
  scaled = scaled * impl_->col_scale.asDiagonal();
  impl_->p_s = scaled * impl_->cost_scale;
  impl_->factorize();
  impl_->polish_valid = false;
}

QpSolution QpSolver::solve(const std::optional<Eigen::VectorXd>& warm_start) {
  return impl_->run(warm_start);
}

const QpProblem& QpSolver::problem() const { return impl_->prob; }

QpSolution solve(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start,
                 QpSettings settings) {
  QpSolver solver(problem, settings);
  return solver.solve(warm_start);
}

}  // namespace mgdispatch

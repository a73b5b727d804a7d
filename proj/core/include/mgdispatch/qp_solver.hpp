#pragma once

#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>

#include "mgdispatch/qp.hpp"

namespace mgdispatch {

enum class SolveStatus { Optimal, Infeasible, MaxIter };

struct QpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd dual;  // per constraint row
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
};

struct QpSettings {
  double eps = 1e-7;          // primal/dual stopping tolerance (unscaled)
  double eps_kkt = 1e-7;      // KKT residual required for Optimal status
  int max_iter = 50000;
  double sigma = 1e-6;        // proximal regularization
  double rho_ineq = 0.1;      // splitting penalty, inequality rows
  double rho_eq_scale = 1e3;  // equality rows use rho_ineq * rho_eq_scale
  double alpha = 1.6;         // relaxation
  int check_every = 10;
  bool polish = true;
  bool adaptive_rho = true;   // residual-balancing penalty updates
  int adaptive_interval = 100;
};

// Operator-splitting QP solver with a direct-KKT linear stage, norm-ball cone
// projections and an active-set polish step. The KKT factorization is reused
// across re-solves; only the linear cost (and box bounds) may change between
// calls, which is the pattern the outer coordination loop needs.
class QpSolver {
 public:
  QpSolver(const QpProblem& problem, QpSettings settings = {});
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;

  void update_linear_cost(const Eigen::VectorXd& q, double constant = 0.0);
  void update_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  // Replace quadratic entries (same sparsity pattern required); refactorizes.
  void update_quadratic(const SparseMat& quadratic);

  QpSolution solve(const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

  const QpProblem& problem() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

QpSolution solve(const QpProblem& problem,
                 const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                 QpSettings settings = {});

}  // namespace mgdispatch

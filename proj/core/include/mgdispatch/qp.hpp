#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgdispatch/errors.hpp"

namespace mgdispatch {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMat = Eigen::SparseMatrix<double>;

// Column key: (entity, symbol, scenario, t). Entities are agent-scoped names
// such as "mv", "lv:lv1", "bess:mv_bess".
struct VarKey {
  std::string entity;
  std::string symbol;
  int scenario = -1;  // -1 for variables shared across scenarios
  int t = -1;

  bool operator==(const VarKey& o) const {
    return entity == o.entity && symbol == o.symbol && scenario == o.scenario && t == o.t;
  }
  std::string str() const;
};

struct VarKeyHash {
  std::size_t operator()(const VarKey& k) const;
};

// Norm-ball constraint on a group of linearized rows: || z_rows || <= radius.
struct BallBlock {
  std::vector<int> rows;
  double radius = 0.0;
};

// Convex QP:
//   min 1/2 x'Px + q'x + r0
//   s.t. lower <= Ax <= upper   (box rows)
//        ||(Ax)_B|| <= radius_B (ball blocks)
// Box rows with lower == upper are equalities. Ball rows carry
// lower = -inf, upper = +inf in the box vectors.
struct QpProblem {
  int n = 0;
  SparseMat quadratic;  // full symmetric P
  Eigen::VectorXd linear;
  double constant = 0.0;
  SparseMat constraints;  // A
  Eigen::VectorXd lower, upper;
  std::vector<BallBlock> balls;
  std::vector<std::string> row_family;  // per row, e.g. "mv.balance.p"
  std::unordered_map<VarKey, int, VarKeyHash> columns;
  std::vector<VarKey> column_keys;  // inverse of `columns`

  int n_rows() const { return static_cast<int>(lower.size()); }
  int col(const VarKey& key) const;
  bool has_col(const VarKey& key) const;
  double objective_value(const Eigen::VectorXd& x) const;

  // Triplet-list text export for external cross-checking.
  void export_triplets(const std::string& path) const;
};

struct Diagnostic {
  std::string kind;  // "non_psd" | "empty_box" | "dangling_column" | ...
  std::string detail;
};

std::vector<Diagnostic> validate(const QpProblem& problem);

// Incremental construction. Quadratic entries accumulate; add_quadratic(i,i,c)
// contributes c*x_i^2 (i.e. P_ii += 2c), add_quadratic(i,j,c) with i != j
// contributes c*x_i*x_j.
class QpBuilder {
 public:
  int add_variable(const VarKey& key, double lb = -kInf, double ub = kInf);
  int variable(const VarKey& key) const;  // throws if missing
  bool has_variable(const VarKey& key) const;

  void add_quadratic(int i, int j, double coeff);
  void add_linear(int i, double coeff);
  void add_constant(double value);
  // Convenience: adds weight * (sum_i coeffs_i x_i + offset)^2.
  void add_squared_term(const std::vector<std::pair<int, double>>& terms,
                        double offset, double weight);

  int begin_row(const std::string& family, double lower, double upper);
  void coeff(int row, int col, double value);
  int add_row(const std::string& family, const std::vector<std::pair<int, double>>& terms,
              double lower, double upper);
  void add_ball(const std::vector<int>& rows, double radius);

  // Box bounds on an existing variable are expressed as singleton rows.
  int bound(const std::string& family, int col, double lower, double upper);

  int n_variables() const { return n_; }
  QpProblem freeze() const;

 private:
  int n_ = 0;
  std::unordered_map<VarKey, int, VarKeyHash> columns_;
  std::vector<VarKey> column_keys_;
  std::vector<Eigen::Triplet<double>> p_triplets_;
  std::vector<double> linear_;
  double constant_ = 0.0;
  std::vector<Eigen::Triplet<double>> a_triplets_;
  std::vector<double> lower_, upper_;
  std::vector<std::string> row_family_;
  std::vector<BallBlock> balls_;
};

}  // namespace mgdispatch

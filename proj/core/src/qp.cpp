#include "mgdispatch/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <fstream>

namespace mgdispatch {

std::string VarKey::str() const {
  std::string s = entity + "/" + symbol;
  if (scenario >= 0) s += "/w" + std::to_string(scenario);
  if (t >= 0) s += "/t" + std::to_string(t);
  return s;
}

std::size_t VarKeyHash::operator()(const VarKey& k) const {
  std::size_t h = std::hash<std::string>{}(k.entity);
  h ^= std::hash<std::string>{}(k.symbol) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<int>{}(k.scenario) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<int>{}(k.t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

int QpProblem::col(const VarKey& key) const {
  auto it = columns.find(key);
  if (it == columns.end()) throw Error("unknown QP column: " + key.str());
  return it->second;
}

bool QpProblem::has_col(const VarKey& key) const { return columns.count(key) > 0; }

double QpProblem::objective_value(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(quadratic * x) + linear.dot(x) + constant;
}

void QpProblem::export_triplets(const std::string& path) const {
  std::ofstream out(path);
  out.precision(17);
  out << "# n " << n << " rows " << n_rows() << '\n';
  out << "P\n";
  for (int k = 0; k < quadratic.outerSize(); ++k)
    for (SparseMat::InnerIterator it(quadratic, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  out << "q\n";
  for (int i = 0; i < n; ++i) out << i << ' ' << linear(i) << '\n';
  out << "A\n";
  for (int k = 0; k < constraints.outerSize(); ++k)
    for (SparseMat::InnerIterator it(constraints, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  out << "bounds\n";
  for (int i = 0; i < n_rows(); ++i)
    out << i << ' ' << lower(i) << ' ' << upper(i) << ' ' << row_family[i] << '\n';
  out << "balls\n";
  for (const auto& b : balls) {
    out << b.radius;
    for (int r : b.rows) out << ' ' << r;
    out << '\n';
  }
}

std::vector<Diagnostic> validate(const QpProblem& problem) {
  std::vector<Diagnostic> out;
  for (int i = 0; i < problem.n_rows(); ++i) {
    if (problem.lower(i) > problem.upper(i))
      out.push_back({"empty_box", "row " + std::to_string(i) + " (" +
                                      problem.row_family[i] + "): lower > upper"});
  }

  std::vector<bool> referenced(problem.n, false);
  for (int k = 0; k < problem.constraints.outerSize(); ++k)
    for (SparseMat::InnerIterator it(problem.constraints, k); it; ++it)
      referenced[it.col()] = true;
  for (int k = 0; k < problem.quadratic.outerSize(); ++k)
    for (SparseMat::InnerIterator it(problem.quadratic, k); it; ++it) {
      referenced[it.col()] = true;
      referenced[it.row()] = true;
    }
  for (int i = 0; i < problem.n; ++i)
    if (!referenced[i] && problem.linear(i) == 0.0)
      out.push_back({"dangling_column",
                     "column " + std::to_string(i) + " (" +
                         problem.column_keys[i].str() + ") unreferenced"});

  // PSD check by attempted factorization of P + delta*I; the small shift keeps
  // singular-but-PSD cost matrices (columns with no quadratic term) from
  // producing zero-pivot false alarms.
  if (problem.n > 0) {
    double scale = 1.0;
    for (int k = 0; k < problem.quadratic.outerSize(); ++k)
      for (SparseMat::InnerIterator it(problem.quadratic, k); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    const double delta = 1e-10 * scale;
    const double tol = -1e-7 * scale;
    bool psd = true;
    if (problem.n <= 2000) {
      Eigen::MatrixXd dense(problem.quadratic);
      dense.diagonal().array() += delta;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
      psd = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > tol;
    } else {
      SparseMat shifted = problem.quadratic;
      SparseMat identity(problem.n, problem.n);
      identity.setIdentity();
      shifted += delta * identity;
      Eigen::SimplicialLDLT<SparseMat> ldlt(shifted);
      psd = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > tol;
    }
    if (!psd) out.push_back({"non_psd", "cost matrix is not positive semidefinite"});
  }
  return out;
}

int QpBuilder::add_variable(const VarKey& key, double lb, double ub) {
  auto [it, inserted] = columns_.emplace(key, n_);
  if (!inserted) throw Error("duplicate QP variable: " + key.str());
  column_keys_.push_back(key);
  linear_.push_back(0.0);
  const int idx = n_++;
  if (lb != -kInf || ub != kInf) bound("bound." + key.symbol, idx, lb, ub);
  return idx;
}

int QpBuilder::variable(const VarKey& key) const {
  auto it = columns_.find(key);
  if (it == columns_.end()) throw Error("unknown QP variable: " + key.str());
  return it->second;
}

bool QpBuilder::has_variable(const VarKey& key) const { return columns_.count(key) > 0; }

void QpBuilder::add_quadratic(int i, int j, double coeff) {
  if (i == j) {
    p_triplets_.emplace_back(i, i, 2.0 * coeff);
  } else {
    p_triplets_.emplace_back(i, j, coeff);
    p_triplets_.emplace_back(j, i, coeff);
  }
}

void QpBuilder::add_linear(int i, double coeff) { linear_[i] += coeff; }

void QpBuilder::add_constant(double value) { constant_ += value; }

void QpBuilder::add_squared_term(const std::vector<std::pair<int, double>>& terms,
                                 double offset, double weight) {
  for (std::size_t a = 0; a < terms.size(); ++a) {
    for (std::size_t b = a; b < terms.size(); ++b) {
      // (sum_a c_a x_a)^2 carries each unordered cross pair twice.
      const double pair = a == b ? 1.0 : 2.0;
      const double c = pair * weight * terms[a].second * terms[b].second;
      add_quadratic(terms[a].first, terms[b].first, c);
    }
    add_linear(terms[a].first, 2.0 * weight * offset * terms[a].second);
  }
  add_constant(weight * offset * offset);
}

int QpBuilder::begin_row(const std::string& family, double lower, double upper) {
  row_family_.push_back(family);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return static_cast<int>(row_family_.size()) - 1;
}

void QpBuilder::coeff(int row, int col, double value) {
  if (value != 0.0) a_triplets_.emplace_back(row, col, value);
}

int QpBuilder::add_row(const std::string& family,
                       const std::vector<std::pair<int, double>>& terms, double lower,
                       double upper) {
  const int row = begin_row(family, lower, upper);
  for (const auto& [col, v] : terms) coeff(row, col, v);
  return row;
}

void QpBuilder::add_ball(const std::vector<int>& rows, double radius) {
  balls_.push_back({rows, radius});
}

int QpBuilder::bound(const std::string& family, int col, double lower, double upper) {
  return add_row(family, {{col, 1.0}}, lower, upper);
}

QpProblem QpBuilder::freeze() const {
  QpProblem p;
  p.n = n_;
  p.quadratic.resize(n_, n_);
  p.quadratic.setFromTriplets(p_triplets_.begin(), p_triplets_.end());
  p.linear = Eigen::Map<const Eigen::VectorXd>(linear_.data(), n_);
  p.constant = constant_;
  const int m = static_cast<int>(row_family_.size());
  p.constraints.resize(m, n_);
  p.constraints.setFromTriplets(a_triplets_.begin(), a_triplets_.end());
  p.lower = Eigen::Map<const Eigen::VectorXd>(lower_.data(), m);
  p.upper = Eigen::Map<const Eigen::VectorXd>(upper_.data(), m);
  p.row_family = row_family_;
  p.balls = balls_;
  p.columns = columns_;
  p.column_keys = column_keys_;
  return p;
}

}  // namespace mgdispatch

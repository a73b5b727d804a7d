#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "mgdispatch/qp.hpp"
#include "mgdispatch/qp_solver.hpp"
#include "oracles.hpp"

using namespace mgdispatch;

namespace {

VarKey xk(int i) { return VarKey{"x", "v", -1, i}; }

// Random strictly convex box-constrained QP with x = 0 feasible, built both
// as the dense oracle form and as a QpProblem.
struct Paired {
  oracle::DenseQp dense;
  QpProblem problem;
};

Paired random_qp(std::mt19937_64& rng, int n = 20, int m = 15, int n_eq = 2) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Paired out;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = g(rng);
  out.dense.P = M.transpose() * M / n + Eigen::MatrixXd::Identity(n, n);
  out.dense.q.resize(n);
  for (int i = 0; i < n; ++i) out.dense.q(i) = g(rng);
  out.dense.A.resize(m + n_eq, n);
  out.dense.l.resize(m + n_eq);
  out.dense.u.resize(m + n_eq);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.dense.A(i, j) = g(rng);
    out.dense.l(i) = -u(rng);
    out.dense.u(i) = u(rng);
  }
  for (int i = m; i < m + n_eq; ++i) {
    for (int j = 0; j < n; ++j) out.dense.A(i, j) = g(rng);
    out.dense.l(i) = 0.0;
    out.dense.u(i) = 0.0;
  }

  QpBuilder b;
  for (int i = 0; i < n; ++i) b.add_variable(xk(i));
  for (int i = 0; i < n; ++i) {
    b.add_quadratic(i, i, out.dense.P(i, i) / 2.0);
    for (int j = i + 1; j < n; ++j) b.add_quadratic(i, j, out.dense.P(i, j));
    b.add_linear(i, out.dense.q(i));
  }
  for (int i = 0; i < m + n_eq; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (int j = 0; j < n; ++j) terms.push_back({j, out.dense.A(i, j)});
    b.add_row("row", terms, out.dense.l(i), out.dense.u(i));
  }
  out.problem = b.freeze();
  return out;
}

}  // namespace

TEST_SUITE("qp") {

TEST_CASE("min x^2 subject to x >= 1") {
  QpBuilder b;
  const int x = b.add_variable(xk(0), 1.0, kInf);
  b.add_quadratic(x, x, 1.0);
  const auto sol = solve(b.freeze());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal(x) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("projection onto the zero-sum hyperplane") {
  Eigen::Vector3d c(1.0, -2.0, 4.0);
  QpBuilder b;
  std::vector<std::pair<int, double>> sum;
  for (int i = 0; i < 3; ++i) {
    const int col = b.add_variable(xk(i));
    b.add_squared_term({{col, 1.0}}, -c(i), 1.0);
    sum.push_back({col, 1.0});
  }
  b.add_row("sum", sum, 0.0, 0.0);
  const auto sol = solve(b.freeze());
  REQUIRE(sol.status == SolveStatus::Optimal);
  const double mean = c.mean();
  for (int i = 0; i < 3; ++i)
    CHECK(sol.primal(i) == doctest::Approx(c(i) - mean).epsilon(1e-6));
}

TEST_CASE("randomized 20-variable QPs match the dense active-set oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    auto pair = random_qp(rng);
    const auto sol = solve(pair.problem);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const auto x_ref = oracle::active_set_solve(pair.dense);
    const double f_ref = oracle::dense_objective(pair.dense, x_ref);
    const double f = pair.problem.objective_value(sol.primal);
    CHECK(std::fabs(f - f_ref) / std::max(1.0, std::fabs(f_ref)) < 1e-6);
  }
}

TEST_CASE("oracle sanity: min x^2 with x >= 1 via the lower bound at -1..") {
  // l <= x <= u with l = -1, u = 3 and objective (x - 2)^2 => x = 2.
  oracle::DenseQp qp;
  qp.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
  qp.q = Eigen::VectorXd::Constant(1, -4.0);
  qp.A = Eigen::MatrixXd::Identity(1, 1);
  qp.l = Eigen::VectorXd::Constant(1, -1.0);
  qp.u = Eigen::VectorXd::Constant(1, 1.5);
  const auto x = oracle::active_set_solve(qp);
  CHECK(x(0) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("norm-ball rows clip to the capability circle") {
  // min (p - 2)^2 + q^2 with ||(p, q)|| <= 1 -> p = 1, q = 0.
  QpBuilder b;
  const int p = b.add_variable(xk(0));
  const int q = b.add_variable(xk(1));
  b.add_squared_term({{p, 1.0}}, -2.0, 1.0);
  b.add_squared_term({{q, 1.0}}, 0.0, 1.0);
  const int rp = b.add_row("ball", {{p, 1.0}}, -kInf, kInf);
  const int rq = b.add_row("ball", {{q, 1.0}}, -kInf, kInf);
  b.add_ball({rp, rq}, 1.0);
  const auto sol = solve(b.freeze());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal(p) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::fabs(sol.primal(q)) < 1e-5);
}

TEST_CASE("contradictory bounds are reported infeasible") {
  QpBuilder b;
  const int x = b.add_variable(xk(0));
  b.add_quadratic(x, x, 1.0);
  b.add_row("ge", {{x, 1.0}}, 1.0, kInf);
  b.add_row("le", {{x, 1.0}}, -kInf, 0.0);
  const auto sol = solve(b.freeze());
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("warm start returns the cold-start optimum") {
  std::mt19937_64 rng(41);
  auto pair = random_qp(rng);
  const auto cold = solve(pair.problem);
  REQUIRE(cold.status == SolveStatus::Optimal);
  Eigen::VectorXd start = cold.primal;
  start.array() += 0.05;
  const auto warm = solve(pair.problem, start);
  REQUIRE(warm.status == SolveStatus::Optimal);
  CHECK(std::fabs(warm.objective - cold.objective) < 1e-8);
}

TEST_CASE("scaling the objective leaves the argmin unchanged") {
  std::mt19937_64 rng(43);
  auto pair = random_qp(rng, 10, 8, 1);
  const auto base = solve(pair.problem);
  REQUIRE(base.status == SolveStatus::Optimal);
  QpProblem scaled = pair.problem;
  scaled.quadratic *= 5.0;
  scaled.linear *= 5.0;
  scaled.constant *= 5.0;
  const auto sol = solve(scaled);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK((sol.primal - base.primal).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(47);
  auto pair = random_qp(rng);
  const auto a = solve(pair.problem);
  const auto b = solve(pair.problem);
  CHECK((a.primal - b.primal).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("add_squared_term expands (sum c_i x_i + o)^2 correctly") {
  QpBuilder b;
  const int x0 = b.add_variable(xk(0));
  const int x1 = b.add_variable(xk(1));
  b.add_squared_term({{x0, 2.0}, {x1, -1.0}}, 0.5, 3.0);
  const auto p = b.freeze();
  Eigen::Vector2d x(0.7, -0.3);
  const double direct = 3.0 * std::pow(2.0 * x(0) - x(1) + 0.5, 2);
  CHECK(p.objective_value(x) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("validate flags empty boxes, dangling columns and indefinite costs") {
  QpBuilder good;
  const int x = good.add_variable(xk(0));
  good.add_quadratic(x, x, 1.0);
  good.add_row("r", {{x, 1.0}}, 0.0, 1.0);
  CHECK(validate(good.freeze()).empty());

  QpBuilder bad_box;
  const int y = bad_box.add_variable(xk(0));
  bad_box.add_quadratic(y, y, 1.0);
  bad_box.add_row("r", {{y, 1.0}}, 2.0, 1.0);
  auto diags = validate(bad_box.freeze());
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].kind == "empty_box");

  QpBuilder dangling;
  dangling.add_variable(xk(0));
  const int z = dangling.add_variable(xk(1));
  dangling.add_quadratic(z, z, 1.0);
  diags = validate(dangling.freeze());
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].kind == "dangling_column");

  // Plant eigenvalues {3, -1} through an orthogonal conjugation.
  QpBuilder indef;
  const int a = indef.add_variable(xk(0));
  const int c = indef.add_variable(xk(1));
  // P = [[1, 2], [2, 1]] has eigenvalues 3 and -1.
  indef.add_quadratic(a, a, 0.5);
  indef.add_quadratic(c, c, 0.5);
  indef.add_quadratic(a, c, 2.0);
  indef.add_row("r", {{a, 1.0}, {c, 1.0}}, 0.0, 1.0);
  diags = validate(indef.freeze());
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].kind == "non_psd");
}

TEST_CASE("singular-but-PSD costs pass validation") {
  QpBuilder b;
  const int x = b.add_variable(xk(0));
  const int y = b.add_variable(xk(1));
  b.add_squared_term({{x, 1.0}, {y, -1.0}}, 0.0, 1.0);  // rank-1 PSD
  b.add_row("r", {{x, 1.0}}, 0.0, 1.0);
  b.add_row("r", {{y, 1.0}}, 0.0, 1.0);
  CHECK(validate(b.freeze()).empty());
}

TEST_CASE("triplet export round-trips through the documented format") {
  QpBuilder b;
  const int x = b.add_variable(xk(0));
  b.add_quadratic(x, x, 1.5);
  b.add_linear(x, -2.0);
  b.add_row("r", {{x, 1.0}}, -1.0, 1.0);
  const auto p = b.freeze();
  const std::string path = "/tmp/mgdispatch_test_qp.txt";
  p.export_triplets(path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string first;
  std::getline(in, first);
  CHECK(first.find("n 1") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("duplicate variables and unknown lookups are rejected") {
  QpBuilder b;
  b.add_variable(xk(0));
  CHECK_THROWS_AS(b.add_variable(xk(0)), Error);
  CHECK_THROWS_AS(b.variable(xk(9)), Error);
}

}  // TEST_SUITE

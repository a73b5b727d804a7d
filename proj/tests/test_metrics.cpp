#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mgdispatch/report.hpp"
#include "oracles.hpp"

using namespace mgdispatch;

TEST_SUITE("metrics") {

TEST_CASE("perfect tracking scores zero on both metrics") {
  Eigen::VectorXd plan(4);
  plan << 0.2, 0.3, -0.1, 0.4;
  Eigen::MatrixXd realized(3, 4);
  for (int w = 0; w < 3; ++w) realized.row(w) = plan.transpose();
  CHECK(compute_mae(plan, realized, 12e6) == 0.0);
  CHECK(compute_nsad(plan, realized) == 0.0);
}

TEST_CASE("a single 0.01 pu deviation on a 12 MVA base is 120 kW") {
  Eigen::VectorXd plan = Eigen::VectorXd::Constant(4, 0.5);
  Eigen::MatrixXd realized(2, 4);
  realized.setConstant(0.5);
  realized(1, 2) = 0.51;
  CHECK(compute_mae(plan, realized, 12e6) == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("a uniform 1% relative deviation is 1% NSAD") {
  Eigen::VectorXd plan = Eigen::VectorXd::Constant(6, 0.4);
  Eigen::MatrixXd realized(2, 6);
  realized.setConstant(0.4 * 1.01);
  CHECK(compute_nsad(plan, realized) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an identically-zero plan is degenerate for NSAD") {
  const Eigen::VectorXd plan = Eigen::VectorXd::Zero(4);
  const Eigen::MatrixXd realized = Eigen::MatrixXd::Random(2, 4);
  CHECK_THROWS_AS(compute_nsad(plan, realized), DegeneratePlanError);
}

TEST_CASE("both metrics equal brute-force recomputation on 20 random fixtures") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_sc = 1 + static_cast<int>(rng() % 6);
    const int horizon = 2 + static_cast<int>(rng() % 40);
    Eigen::VectorXd plan(horizon);
    for (int t = 0; t < horizon; ++t) plan(t) = 0.5 + g(rng);
    Eigen::MatrixXd realized(n_sc, horizon);
    for (int w = 0; w < n_sc; ++w)
      for (int t = 0; t < horizon; ++t) realized(w, t) = plan(t) + 0.2 * g(rng);
    const double base = 1e6 * (1.0 + (trial % 5));
    CHECK(compute_mae(plan, realized, base) ==
          oracle::brute_mae_kw(plan, realized, base));
    CHECK(compute_nsad(plan, realized) == oracle::brute_nsad_pct(plan, realized));
  }
}

TEST_CASE("metrics JSON serialization is stable and complete") {
  MetricsReport report;
  report.values["mv.mae_kw"] = 12.5;
  report.values["mv.nsad_pct"] = 0.75;
  report.values["lv.lv1.mae_kw"] = 3.0;
  report.wall_seconds = 42.0;  // stdout-only, never serialized
  const std::string path = "/tmp/mgdispatch_test_metrics.json";
  save_metrics_json(report, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::remove(path.c_str());
  CHECK(text.find("\"mv.mae_kw\"") != std::string::npos);
  CHECK(text.find("\"mv.nsad_pct\"") != std::string::npos);
  CHECK(text.find("\"lv.lv1.mae_kw\"") != std::string::npos);
  CHECK(text.find("wall") == std::string::npos);
}

}  // TEST_SUITE

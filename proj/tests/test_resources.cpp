#include <doctest.h>

#include "fixtures.hpp"
#include "mgdispatch/resources.hpp"

using namespace mgdispatch;

namespace {

// 1 MVA grid, 900 s steps, reservoir sized so SOC falls 0.01 per step at
// full-rated discharge: slope * s_max = 0.01 with s_max = 0.25.
BessParams reference_bess() {
  BessParams p = testfix::bess("ref", 1, 0.25, 6.25e6, 1e6);
  // slope = 1e6 * 900 / (6.25e6 * 3600) = 0.04; 0.04 * 0.25 = 0.01.
  return p;
}

}  // namespace

TEST_SUITE("resources") {

TEST_CASE("zero discharge keeps the SOC at its initial value") {
  const auto p = reference_bess();
  const auto soc = soc_trajectory(p, Eigen::VectorXd::Zero(96), 900.0);
  for (int t = 0; t < 96; ++t) CHECK(soc(t) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("full-rated discharge drains 0.01 SOC per step") {
  const auto p = reference_bess();
  CHECK(p.soc_slope(900.0) * p.s_max == doctest::Approx(0.01).epsilon(1e-12));
  const auto soc = soc_trajectory(p, Eigen::VectorXd::Constant(10, p.s_max), 900.0);
  for (int t = 0; t < 10; ++t)
    CHECK(soc(t) == doctest::Approx(0.5 - 0.01 * (t + 1)).epsilon(1e-12));
}

TEST_CASE("SOC telescoping identity is exact") {
  const auto p = reference_bess();
  Eigen::VectorXd series(8);
  series << 0.1, -0.2, 0.05, 0.25, -0.25, 0.0, 0.125, -0.05;
  const auto soc = soc_trajectory(p, series, 900.0);
  const double slope = p.soc_slope(900.0);
  // Bit-exact against the same left-to-right fold the recursion defines.
  double acc = p.soc_init;
  for (int t = 0; t < 8; ++t) acc -= slope * series(t);
  CHECK(soc(7) == acc);
  CHECK(soc(7) - p.soc_init ==
        doctest::Approx(-slope * series.sum()).epsilon(1e-14));
}

TEST_CASE("feasibility cost is one per (scenario, t)") {
  ResourceProfile prof;
  prof.resource_id = "ref";
  prof.p = Eigen::MatrixXd::Random(2, 96);
  prof.q = Eigen::MatrixXd::Random(2, 96);
  CHECK(bess_cost(prof) == 192.0);
  prof.p = Eigen::MatrixXd::Zero(1, 1);
  prof.q = Eigen::MatrixXd::Zero(1, 1);
  CHECK(bess_cost(prof) == 1.0);
}

TEST_CASE("capability check passes on the zero profile") {
  const auto p = reference_bess();
  ResourceProfile prof;
  prof.p = Eigen::MatrixXd::Zero(2, 12);
  prof.q = Eigen::MatrixXd::Zero(2, 12);
  CHECK(capability_check(p, prof, 900.0).empty());
}

TEST_CASE("over-rating at one step yields one apparent-power violation") {
  const auto p = reference_bess();
  ResourceProfile prof;
  prof.p = Eigen::MatrixXd::Zero(1, 12);
  prof.q = Eigen::MatrixXd::Zero(1, 12);
  prof.p(0, 4) = 1.01 * p.s_max;
  const auto v = capability_check(p, prof, 900.0);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == "apparent_power");
  CHECK(v[0].scenario == 0);
  CHECK(v[0].t == 4);
}

TEST_CASE("sustained discharge violates the SOC floor from the first offender on") {
  const auto p = reference_bess();
  // 0.01 SOC per step from 0.5: the floor a = 0.1 is crossed after 40 steps.
  ResourceProfile prof;
  prof.p = Eigen::MatrixXd::Constant(1, 50, p.s_max);
  prof.q = Eigen::MatrixXd::Zero(1, 50);
  const auto v = capability_check(p, prof, 900.0);
  REQUIRE(!v.empty());
  int first_soc = -1;
  int n_soc = 0;
  for (const auto& viol : v)
    if (viol.kind == "soc_low") {
      ++n_soc;
      if (first_soc < 0) first_soc = viol.t;
    }
  CHECK(first_soc == 40);
  CHECK(n_soc == 10);  // every step from the crossing on, 40..49
}

TEST_CASE("the feasible set is convex under sampling") {
  const auto p = reference_bess();
  ResourceProfile a, b;
  a.p = Eigen::MatrixXd::Constant(1, 10, 0.2);
  a.q = Eigen::MatrixXd::Constant(1, 10, 0.1);
  b.p = Eigen::MatrixXd::Constant(1, 10, -0.2);
  b.q = Eigen::MatrixXd::Constant(1, 10, -0.1);
  REQUIRE(capability_check(p, a, 900.0).empty());
  REQUIRE(capability_check(p, b, 900.0).empty());
  for (double lam : {0.25, 0.5, 0.75}) {
    ResourceProfile mix;
    mix.p = lam * a.p + (1.0 - lam) * b.p;
    mix.q = lam * a.q + (1.0 - lam) * b.q;
    CHECK(capability_check(p, mix, 900.0).empty());
  }
}

TEST_CASE("parameter validation rejects bad storage configs") {
  auto p = reference_bess();
  p.s_max = 0.0;
  CHECK_THROWS_AS(p.validate(), SchemaError);
  p = reference_bess();
  p.margin_a = 0.5;
  CHECK_THROWS_AS(p.validate(), SchemaError);
  p = reference_bess();
  p.soc_init = 0.95;
  CHECK_THROWS_AS(p.validate(), SchemaError);
}

}  // TEST_SUITE

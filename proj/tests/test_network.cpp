#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "mgdispatch/network.hpp"
#include "oracles.hpp"

using namespace mgdispatch;

TEST_SUITE("network") {

TEST_CASE("admittance of a single branch") {
  const auto m = testfix::two_bus(0.01, 0.01);
  const auto y = build_admittance(m);
  const Complex yb = 1.0 / Complex(0.01, 0.01);
  CHECK(std::abs(yb - Complex(50.0, -50.0)) < 1e-9);
  CHECK(std::abs(y(0, 0) - yb) < 1e-12);
  CHECK(std::abs(y(1, 1) - yb) < 1e-12);
  CHECK(std::abs(y(0, 1) + yb) < 1e-12);
  CHECK(std::abs(y(1, 0) + yb) < 1e-12);
}

TEST_CASE("pi-model shunt lands half on each end") {
  const auto base = build_admittance(testfix::two_bus(0.01, 0.01, 0.0));
  const auto shunted = build_admittance(testfix::two_bus(0.01, 0.01, 0.02));
  CHECK(std::abs(shunted(0, 0) - base(0, 0) - Complex(0.0, 0.01)) < 1e-12);
  CHECK(std::abs(shunted(1, 1) - base(1, 1) - Complex(0.0, 0.01)) < 1e-12);
  CHECK(std::abs(shunted(0, 1) - base(0, 1)) < 1e-12);
}

TEST_CASE("triangle matches hand assembly") {
  const double r = 0.01, x = 0.02, b = 0.004;
  const auto m = testfix::three_bus_triangle(r, x, b);
  const auto y = build_admittance(m);
  const Complex yb = 1.0 / Complex(r, x);
  const Complex half_shunt(0.0, b / 2.0);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(y(i, i) - (2.0 * yb + 2.0 * half_shunt)) < 1e-12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(y(i, j) + yb) < 1e-12);
}

TEST_CASE("zero-impedance branch is rejected") {
  auto m = testfix::two_bus();
  m.branches[0].series_impedance = Complex(0.0, 0.0);
  CHECK_THROWS_AS(m.validate(), SchemaError);
}

TEST_CASE("no-load flow is flat") {
  const auto m = testfix::three_bus_triangle();
  const auto st = solve_ac_power_flow(m, ComplexVector::Zero(2), Complex(1.0, 0.0));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(st.bus_voltages(i) - Complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(st.slack_injection) < 1e-10);
  CHECK(std::abs(st.total_loss) < 1e-10);
  for (int l = 0; l < m.n_branches(); ++l) CHECK(std::abs(st.branch_currents(l)) < 1e-10);
}

TEST_CASE("Newton-Raphson matches the Gauss-Seidel oracle") {
  const auto m = testfix::two_bus(0.01, 0.01);
  ComplexVector inj(1);
  inj(0) = Complex(-0.1, 0.0);
  const auto st = solve_ac_power_flow(m, inj, Complex(1.0, 0.0));
  const auto v_gs = oracle::gauss_seidel_flow(m, inj, Complex(1.0, 0.0));
  CHECK(std::abs(std::abs(st.bus_voltages(1)) - std::abs(v_gs(1))) < 1e-8);
  CHECK(std::abs(st.bus_voltages(1) - v_gs(1)) < 1e-8);
}

TEST_CASE("Gauss-Seidel oracle agreement on random meshed instances") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testfix::random_three_bus(rng);
    const auto st =
        solve_ac_power_flow(inst.model, inst.injections, inst.slack_voltage);
    const auto v_gs =
        oracle::gauss_seidel_flow(inst.model, inst.injections, inst.slack_voltage);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(st.bus_voltages(i) - v_gs(i)) < 1e-8);
  }
}

TEST_CASE("lower slack voltage shifts the no-load profile down") {
  const auto m = testfix::two_bus();
  const auto st = solve_ac_power_flow(m, ComplexVector::Zero(1), Complex(0.98, 0.0));
  CHECK(std::abs(std::abs(st.bus_voltages(0)) - 0.98) < 1e-12);
  CHECK(std::abs(std::abs(st.bus_voltages(1)) - 0.98) < 1e-10);
}

TEST_CASE("power balance holds on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testfix::random_three_bus(rng);
    const auto st =
        solve_ac_power_flow(inst.model, inst.injections, inst.slack_voltage);
    const double residual = st.slack_injection.real() +
                            inst.injections.real().sum() - st.total_loss.real();
    CHECK(std::abs(residual) < 1e-8);
    CHECK(st.total_loss.real() >= -1e-12);
  }
}

TEST_CASE("doubling load strictly increases losses") {
  const auto m = testfix::two_bus();
  ComplexVector small(1), big(1);
  small(0) = Complex(-0.1, -0.03);
  big(0) = Complex(-0.2, -0.06);
  const auto s1 = solve_ac_power_flow(m, small, Complex(1.0, 0.0));
  const auto s2 = solve_ac_power_flow(m, big, Complex(1.0, 0.0));
  CHECK(s2.total_loss.real() > s1.total_loss.real() * 2.0);
}

TEST_CASE("slack phase rotation rotates every voltage, magnitudes unchanged") {
  const auto m = testfix::three_bus_triangle();
  ComplexVector inj(2);
  inj(0) = Complex(-0.2, -0.05);
  inj(1) = Complex(0.1, 0.0);
  const auto base = solve_ac_power_flow(m, inj, Complex(1.0, 0.0));
  const Complex rot = std::polar(1.0, 0.3);
  const auto rotated = solve_ac_power_flow(m, inj, rot);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(std::abs(rotated.bus_voltages(i)) - std::abs(base.bus_voltages(i))) <
          1e-9);
    CHECK(std::abs(rotated.bus_voltages(i) - rot * base.bus_voltages(i)) < 1e-9);
  }
  CHECK(std::abs(rotated.slack_injection - base.slack_injection) < 1e-8);
}

TEST_CASE("absurd loading raises NonConvergence") {
  const auto m = testfix::two_bus();
  ComplexVector inj(1);
  inj(0) = Complex(-60.0, 0.0);
  CHECK_THROWS_AS(solve_ac_power_flow(m, inj, Complex(1.0, 0.0)), NonConvergence);
}

TEST_CASE("grid file parsing enforces the schema") {
  CHECK_THROWS_AS(parse_network("{\"buses\": []}", "t"), SchemaError);
  CHECK_THROWS_AS(parse_network("not json", "t"), SchemaError);
}

}  // TEST_SUITE

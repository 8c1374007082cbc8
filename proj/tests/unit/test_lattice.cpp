#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tunnelshock/errors.hpp"
#include "tunnelshock/lattice.hpp"

using namespace tunnelshock;
using namespace fixtures;

namespace {

double gaussian_error(double h, double dx) {
  const auto u0 = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, h, -5.0, 5.0, dx);
  const auto u = kf_lattice(burgers(), u0, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.x.size(); ++i) {
    const double x = u.x[i];
    if (std::fabs(x) > 1.0) continue;
    const double exact = std::pow(2.0, -0.5) * std::exp(-x * x / (4.0 * h));
    worst = std::max(worst, std::fabs(u.values[i] / exact - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("heat-type Gaussian") {
  CHECK(gaussian_error(0.05, 2e-3) <= 1e-3);
}

TEST_CASE("second order in space") {
  const double coarse = gaussian_error(0.1, 0.02);
  const double fine = gaussian_error(0.1, 0.01);
  CHECK(coarse / fine >= 3.5);
}

TEST_CASE("pure reaction") {
  const SymbolModel m(Expression::constant(0.0), Expression::constant(-1.0));
  const double h = 0.2;
  const auto u0 = lattice_initial([](double x) { return x * x; }, [](double) { return 1.0; }, h, -3.0, 3.0, 0.01);
  const auto u = kf_lattice(m, u0, 0.5);
  // RK4 amplification of u' = -u / h per step.
  const double z = -u.dt / h;
  const double g = std::pow(1.0 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24, static_cast<double>(u.steps));
  for (std::size_t i = 1; i + 1 < u.x.size(); ++i) {
    CHECK(u.values[i] == doctest::Approx(u0.values[i] * g).epsilon(1e-12));
    CHECK(u.values[i] == doctest::Approx(u0.values[i] * std::exp(-0.5 / h)).epsilon(1e-3));
  }
}

TEST_CASE("pure jump keeps positivity") {
  const double h = 0.1;
  const auto u0 = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, h, -6.0, 6.0, 0.01);
  const auto u = kf_lattice(pure_jump(), u0, 0.5);
  for (double v : u.values) CHECK(v >= 0.0);
  const auto off = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, 0.1, -6.0, 6.0, 0.03);
  CHECK_THROWS_AS(kf_lattice(pure_jump(), off, 0.5), ValidationError);
}

TEST_CASE("stability bound and boundary contact") {
  const auto u0 = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, 0.1, -5.0, 5.0, 0.01);
  LatticeOptions o;
  o.dt = 10.0 * lattice_stability_bound(burgers(), u0);
  try {
    kf_lattice(burgers(), u0, 0.1, o);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::stability);
  }
  const auto narrow = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, 0.5, -1.0, 1.0, 0.01);
  try {
    kf_lattice(burgers(), narrow, 1.0);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::boundary_contact);
  }
}

TEST_CASE("tunnel comparison for the Gaussian") {
  const auto f = fan(burgers(), action("x^2/2", "x", "1"), -4.0, 4.0, 801, 1.0);
  const auto gd = transport_R(f, burgers(), Expression::constant(1.0));
  std::vector<LatticeField> fields;
  for (double h : {0.2, 0.1}) {
    const auto u0 = lattice_initial([](double x) { return x * x / 2; }, [](double) { return 1.0; }, h, -5.0, 5.0, 0.005);
    fields.push_back(kf_lattice(burgers(), u0, 1.0));
  }
  const auto table = tunnel_compare(fields, gd, {});
  REQUIRE(table.rows.size() == 2);
  for (const auto& r : table.rows) {
    CHECK(r.error <= 1e-4);
    CHECK(r.points > 0);
  }
}

TEST_CASE("tunnel comparison excludes the shock collar") {
  // u0 = x - 3 tanh x focuses at t = 0.5; S0 stays bounded below.
  const auto S0 = action("x^2/2 + 3*log(sech(x))", "x - 3*tanh(x)", "1 - 3*sech(x)^2");
  const auto f = fan(burgers(), S0, -6.0, 6.0, 1201, 1.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  const auto u0 = lattice_initial([&](double x) { return S0.action(x); }, [](double) { return 1.0; }, 0.1, -7.0,
                                  7.0, 0.01);
  const std::vector<LatticeField> fields{kf_lattice(burgers(), u0, 1.0)};
  const auto table = tunnel_compare(fields, gd, {});
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].points > 0);
  CHECK(table.rows[0].points < 201);
  TunnelCompareOptions inside;
  inside.x_lo = -0.01;
  inside.x_hi = 0.01;
  try {
    tunnel_compare(fields, gd, inside);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::empty_comparison);
  }
}

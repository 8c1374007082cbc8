#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tunnelshock/errors.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/oracle.hpp"

using namespace tunnelshock;
using namespace fixtures;

TEST_CASE("Hopf-Lax values") {
  const auto S0 = action("x^2/2", "x", "1");
  CHECK(hopf_lax(burgers(), S0, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-8));
  const double u = std::tanh(0.7);
  CHECK(std::fabs(hopf_lax(burgers(), tanh_data(), 0.7, 1e-4) - (tanh_data().action(0.7) - 0.5e-4 * u * u)) <= 1e-7);
  CHECK_THROWS_AS(hopf_lax(SymbolModel(Expression::constant(0.5), expr("x")), S0, 0.0, 1.0), ValidationError);
  HopfLaxOptions tiny;
  tiny.momentum = 0.1;
  try {
    hopf_lax(burgers(), S0, 3.0, 1.0, tiny);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::range);
  }
}

TEST_CASE("Hopf-Lax agrees with the essential action before and after the focus") {
  const auto f = fan(burgers(), tanh_data(), -6.0, 6.0, 2401, 3.0);
  const auto xs = uniform_grid(-3.0, 3.0, 61);
  for (double t : {0.5, 1.5, 3.0}) {
    const auto es = essential(slice(*f, t), burgers(), xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(std::fabs(es.S[i] - hopf_lax(burgers(), tanh_data(), xs[i], t)) <= 1e-3);
    }
  }
}

TEST_CASE("Godunov flux") {
  CHECK(godunov_flux(burgers(), 1.0, -1.0) == doctest::Approx(0.5));
  CHECK(godunov_flux(burgers(), -1.0, 1.0) == doctest::Approx(0.0));
  CHECK(godunov_flux(burgers(), 2.0, 0.0) == doctest::Approx(2.0));
  CHECK(godunov_flux(burgers(), -2.0, -1.0) == doctest::Approx(0.5));
}

TEST_CASE("Godunov Riemann problems") {
  GodunovOptions o;
  o.x_min = -2.0;
  o.x_max = 2.0;
  o.cells = 2000;
  o.T = 1.0;
  auto step = [](double l, double r) { return [l, r](double x) { return x < 0.0 ? l : r; }; };

  const auto rest = godunov(burgers(), step(1.0, -1.0), o);
  REQUIRE(rest.shocks.size() == 1);
  CHECK(std::fabs(rest.shocks[0]) <= 2.0 * rest.dx);

  const auto moving = godunov(burgers(), step(2.0, 0.0), o);
  REQUIRE(moving.shocks.size() == 1);
  CHECK(std::fabs(moving.shocks[0] - 1.0) <= 2.0 * moving.dx);

  const auto fan = godunov(burgers(), step(-1.0, 1.0), o);
  double l1 = 0.0;
  for (std::size_t i = 0; i < fan.x.size(); ++i) {
    const double x = fan.x[i];
    const double exact = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
    l1 += std::fabs(fan.v[i] - exact) * fan.dx;
  }
  CHECK(l1 <= 5e-2);
  CHECK(fan.shocks.empty());

  GodunovOptions big = o;
  big.dt = 0.1;
  try {
    godunov(burgers(), step(1.0, -1.0), big);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::stability);
  }
}

TEST_CASE("velocity of the characteristics solution matches Godunov") {
  const auto f = fan(burgers(), tanh_data(), -6.0, 6.0, 2401, 2.0);
  GodunovOptions o;
  o.x_min = -4.0;
  o.x_max = 4.0;
  o.cells = 2000;
  o.T = 2.0;
  const auto g = godunov(burgers(), [](double x) { return -std::tanh(x); }, o);
  const auto es = essential(slice(*f, 2.0), burgers(), g.x);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) l1 += std::fabs(es.u[i] - g.v[i]) * g.dx;
  CHECK(l1 <= 5e-2);
  REQUIRE(g.shocks.size() == 1);
  CHECK(std::fabs(g.shocks[0]) <= 2.0 * g.dx);
}

TEST_CASE("shock location by equal area") {
  std::vector<double> x, v;
  for (int i = 0; i < 100; ++i) {
    x.push_back(-1.0 + 0.02 * (i + 0.5));
    v.push_back(x.back() < 0.31 ? 1.0 : -1.0);
  }
  const auto s = locate_shocks(x, v, 0.1);
  REQUIRE(s.size() == 1);
  CHECK(std::fabs(s[0] - 0.31) <= 0.02);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "tunnelshock/errors.hpp"

using namespace tunnelshock;
using fixtures::burgers;
using fixtures::expr;
using fixtures::pure_jump;

TEST_CASE("symbol values") {
  CHECK(burgers().P(0.0, 2.0) == 2.0);
  CHECK(pure_jump().P(0.0, 0.0) == 0.0);
  const SymbolModel linear(Expression::constant(0.5), expr("x"));
  CHECK(linear.P(3.0, 0.0) == doctest::Approx(3.0));
  CHECK(linear.dP_dx(3.0, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("symbol p-derivatives") {
  CHECK(burgers().dP_dp(0.0, 2.0) == 2.0);
  CHECK(burgers().hess(0.3, -4.0) == 1.0);
  CHECK(pure_jump().dP_dp(0.0, 0.0) == 1.0);
  CHECK(pure_jump().hess(0.0, 1.0) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("analytic derivatives agree with finite differences") {
  const SymbolModel m(expr("0.5+0.1*sin(x)"), expr("0.2*cos(x)"),
                      {Jump{1.0, expr("1+0.5*tanh(x)")}, Jump{-0.5, Expression::constant(0.3)}});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> X(-3.0, 3.0), Pm(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double x = X(rng), p = Pm(rng), d = 1e-5;
    const double fd_p = (m.P(x, p + d) - m.P(x, p - d)) / (2 * d);
    const double fd_pp = (m.dP_dp(x, p + d) - m.dP_dp(x, p - d)) / (2 * d);
    CHECK(std::fabs(m.dP_dp(x, p) - fd_p) <= 1e-7 * std::max(1.0, std::fabs(fd_p)));
    CHECK(std::fabs(m.hess(x, p) - fd_pp) <= 1e-7 * std::max(1.0, std::fabs(fd_pp)));
    CHECK(m.hess(x, p) > 0.0);
    CHECK(m.P(x, 0.0) == doctest::Approx(m.V()(x)));
    const auto all = m.derivatives(x, p);
    CHECK(all.P == m.P(x, p));
    CHECK(all.Pxp == doctest::Approx(m.d2P_dxdp(x, p)));
  }
}

TEST_CASE("Legendre transform") {
  auto lp = burgers().legendre(0.0, 3.0);
  CHECK(lp.p == doctest::Approx(3.0));
  CHECK(lp.L == doctest::Approx(4.5));
  lp = burgers().legendre(0.0, -2.0);
  CHECK(lp.p == doctest::Approx(-2.0));
  CHECK(lp.L == doctest::Approx(2.0));
  lp = pure_jump().legendre(0.0, 1.0);
  CHECK(std::fabs(lp.p) <= 1e-12);
  CHECK(std::fabs(lp.L) <= 1e-12);
  CHECK_THROWS_AS(pure_jump().legendre(0.0, -1.0), NumericalError);
}

TEST_CASE("Legendre duality on random probes") {
  const SymbolModel m(Expression::constant(0.5), Expression::constant(0.0), {Jump{1.0, Expression::constant(1.0)}});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> V(-3.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    const double v = V(rng);
    const auto lp = m.legendre(0.0, v);
    CHECK(std::fabs(m.P(0.0, lp.p) + lp.L - lp.p * v) <= 1e-10 * std::max(1.0, std::fabs(lp.p * v)));
  }
}

TEST_CASE("exponent guard and validation") {
  CHECK_THROWS_AS(pure_jump().P(0.0, 800.0), NumericalError);
  const SymbolModel bad(expr("x"), Expression::constant(0.0));
  CHECK_THROWS_AS(bad.validate(-1.0, 1.0), ValidationError);
  CHECK_NOTHROW(burgers().validate(-1.0, 1.0));
  CHECK(burgers().homogeneous());
  CHECK_FALSE(SymbolModel(Expression::constant(0.5), expr("x")).homogeneous());
}

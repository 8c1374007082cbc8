#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/expr.hpp"

using namespace tunnelshock;

TEST_CASE("expression precedence and associativity") {
  CHECK(Expression::parse("1+2*3")(0.0) == 7.0);
  CHECK(Expression::parse("tanh(0)")(0.0) == 0.0);
  CHECK(Expression::parse("2^3^2")(0.0) == 512.0);
  CHECK(Expression::parse("-2^2")(0.0) == -4.0);
  CHECK(Expression::parse("8/4/2")(0.0) == 1.0);
  CHECK(Expression::parse("10-4-3")(0.0) == 3.0);
  CHECK(Expression::parse("-x*3")(2.0) == -6.0);
  CHECK(Expression::parse("max(x, 1) + min(t, 2)").eval({0.5, 5.0, 0.0}) == 3.0);
  CHECK(Expression::parse("2*pi")(0.0) == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("expression evaluation") {
  CHECK(Expression::parse("2*x+sin(x)")(0.0) == 0.0);
  CHECK(Expression::parse("exp(x)-1")(0.0) == 0.0);
  CHECK(Expression::parse("sech(x)")(0.0) == 1.0);
  CHECK(Expression::parse("abs(x)")(-3.5) == 3.5);
  CHECK(Expression::parse("x*t")(3.0, 2.0) == 6.0);
  CHECK(Expression::parse("1.5e-3*x")(1000.0) == doctest::Approx(1.5));
}

TEST_CASE("syntax errors carry the offset") {
  try {
    Expression::parse("x+");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
    CHECK_FALSE(e.expected().empty());
  }
  CHECK_THROWS_AS(Expression::parse("foo(x)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(x"), ParseError);
  CHECK_THROWS_AS(Expression::parse(""), ValidationError);
  CHECK_THROWS_AS(Expression::parse("sin(x, 1)"), ParseError);
}

TEST_CASE("u is only allowed when requested") {
  CHECK_THROWS_AS(Expression::parse("u^2"), ParseError);
  const auto e = Expression::parse("0.5*u^2", VariableSet::space_velocity());
  CHECK(e.eval({0.0, 0.0, 2.0}) == 2.0);
  CHECK(e.uses(Variable::u));
  CHECK_FALSE(e.uses(Variable::x));
}

TEST_CASE("domain errors are never silent") {
  auto domain = [](const char* s, double x) {
    try {
      Expression::parse(s)(x);
    } catch (const NumericalError& e) {
      return e.kind() == Failure::domain;
    }
    return false;
  };
  CHECK(domain("1/x", 0.0));
  CHECK(domain("log(x)", 0.0));
  CHECK(domain("log(x)", -1.0));
  CHECK(domain("exp(x)", 1000.0));
}

TEST_CASE("rendering parses back to the same function") {
  for (const char* s : {"1+2*3", "-x^2/2", "exp(-x^2)*cos(3*x)", "2^-x", "min(x, -x) - max(1, t)"}) {
    const auto e = Expression::parse(s);
    const auto r = Expression::parse(e.to_string());
    for (double x : {-1.3, 0.0, 0.7}) CHECK(r(x, 0.4) == e(x, 0.4));
  }
  CHECK(Expression::constant(2.5).is_constant());
  CHECK(Expression::constant(2.5)(7.0) == 2.5);
}

TEST_CASE("numerical derivatives match closed forms") {
  struct Case {
    const char* f;
    const char* df;
    const char* d2f;
  };
  const Case cases[] = {{"log(sech(x))", "-tanh(x)", "-sech(x)^2"},
                        {"0.2*cos(x)", "-0.2*sin(x)", "-0.2*cos(x)"},
                        {"exp(-x^2)", "-2*x*exp(-x^2)", "(4*x^2-2)*exp(-x^2)"},
                        {"0.5*sin(x)", "0.5*cos(x)", "-0.5*sin(x)"}};
  for (const auto& c : cases) {
    const auto f = Expression::parse(c.f);
    const auto df = Expression::parse(c.df);
    const auto d2f = Expression::parse(c.d2f);
    for (double x = -2.0; x <= 2.0; x += 0.25) {
      CHECK(std::fabs(derivative_x(f, x, 0.0, 1e-5) - df(x)) <= 1e-8);
      CHECK(std::fabs(second_derivative_x(f, x, 0.0, 1e-4) - d2f(x)) <= 1e-6);
    }
  }
}

TEST_CASE("concurrent evaluation of one expression") {
  const auto e = Expression::parse("exp(-x^2)*cos(3*x)+tanh(t)");
  std::vector<double> out(4000);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < out.size(); i += 4) out[i] = e(0.001 * i, 0.5);
    });
  }
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == e(0.001 * i, 0.5));
}

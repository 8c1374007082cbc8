#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/numerics.hpp"
#include "tunnelshock/parallel.hpp"

using namespace tunnelshock;

TEST_CASE("quadrature") {
  CHECK(numerics::simpson([](double x) { return x * x * x; }, 0.0, 2.0, 2) == doctest::Approx(4.0));
  CHECK(numerics::adaptive_simpson([](double x) { return std::exp(-x * x); }, -6.0, 6.0, 1e-12) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-11));
  double s = 0.0;
  for (int i = 0; i <= 8; ++i) s += numerics::simpson_weight(i, 8, 0.0, 1.0);
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("roots and minima") {
  CHECK(numerics::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(numerics::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), NumericalError);
  CHECK(numerics::minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("interpolation and differentiation weights") {
  const numerics::Hermite h{0.0, 1.0, 0.0, 3.0};  // s^3
  CHECK(h(0.5) == doctest::Approx(0.125));
  CHECK(h.slope(0.5) == doctest::Approx(0.75));
  const std::array<double, 4> xs{0.0, 1.0, 2.0, 3.0}, ys{1.0, 2.0, 5.0, 10.0};  // 1 + x^2
  CHECK(numerics::lagrange4(xs, ys, 1.5) == doctest::Approx(3.25));
  const std::vector<double> nodes{0.0, 0.1, 0.3, 0.35, 0.6};
  const auto w = numerics::derivative_weights(0.1, nodes);
  double d = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) d += w[i] * std::pow(nodes[i], 4);
  CHECK(d == doctest::Approx(4 * std::pow(0.1, 3)).epsilon(1e-10));
  const std::vector<double> x{1.0, 2.0, 4.0}, y{3.0, 5.0, 9.0};
  CHECK(numerics::fitted_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
  for (int h : hits) CHECK(h == 1);
  try {
    parallel_for(
        100, [](std::size_t i) {
          if (i == 17 || i == 60) throw ValidationError("index " + std::to_string(i));
        },
        3);
    FAIL("no error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "index 17");
  }
}

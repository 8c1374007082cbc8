#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tunnelshock/errors.hpp"
#include "tunnelshock/oracle.hpp"
#include "tunnelshock/verify.hpp"

using namespace tunnelshock;
using namespace fixtures;

namespace {

GeneralizedDensity scaled(const GeneralizedDensity& gd, double factor) {
  GeneralizedDensity out = gd;
  for (auto& s : out.mutable_shocks()) {
    for (auto& p : s.path) {
      p.e *= factor;
      p.de *= factor;
    }
  }
  return out;
}

const GeneralizedDensity& riemann() {
  static const GeneralizedDensity gd = [] {
    const auto f = fan(burgers(), riemann_data(1.0, -1.0), -3.0, 3.0, 2401, 1.0);
    return build_density(f, burgers(), Expression::constant(1.0));
  }();
  return gd;
}

}  // namespace

TEST_CASE("bump test function") {
  const BumpTestFunction z{0.2, 0.5, 0.4, 0.3};
  CHECK(z.value(0.2, 0.5) == 1.0);
  CHECK(z.value(0.7, 0.5) == 0.0);
  CHECK(z.value(0.2, 0.1) == 0.0);
  const double d = 1e-6;
  CHECK(z.dx(0.3, 0.6) == doctest::Approx((z.value(0.3 + d, 0.6) - z.value(0.3 - d, 0.6)) / (2 * d)).epsilon(1e-6));
  CHECK(z.dt(0.3, 0.6) == doctest::Approx((z.value(0.3, 0.6 + d) - z.value(0.3, 0.6 - d)) / (2 * d)).epsilon(1e-6));
  CHECK(z.norm() == doctest::Approx(0.4 * 0.3 * (32.0 / 35.0) * (32.0 / 35.0)));
}

TEST_CASE("smooth rarefaction: pure quadrature error") {
  const auto f = fan(burgers(), action("x^2/2", "x", "1"), -3.0, 3.0, 601, 1.0);
  const auto gd = transport_R(f, burgers(), Expression::constant(1.0));
  const BumpTestFunction z{0.3, 0.5, 0.8, 0.3};
  const double r5 = identity_residual(gd, z, 5);
  const double r6 = identity_residual(gd, z, 6);
  const double r7 = identity_residual(gd, z, 7);
  CHECK((r6 <= kRoundoffFloor || std::log2(r5 / r6) >= 1.8));
  CHECK((r7 <= kRoundoffFloor || std::log2(r6 / r7) >= 1.8));
}

TEST_CASE("Riemann amplitude certified on a bump over the shock") {
  const auto& gd = riemann();
  const BumpTestFunction z{0.0, 0.55, 0.5, 0.4};
  const double ok = identity_residual(gd, z, 7);
  CHECK(ok <= 1e-4 * z.norm());
  const double bad = identity_residual(scaled(gd, 1.1), z, 7);
  CHECK(bad >= 10.0 * ok);
  // Monotone in the size of the perturbation.
  const double r5 = identity_residual(scaled(gd, 1.05), z, 7);
  const double r20 = identity_residual(scaled(gd, 1.2), z, 7);
  CHECK(r5 < bad);
  CHECK(bad < r20);
}

TEST_CASE("support clipping") {
  const BumpTestFunction z{0.0, 0.2, 0.5, 0.4};
  try {
    identity_residual(riemann(), z, 5);
    FAIL("no error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == Failure::support_clipping);
  }
}

TEST_CASE("identity suite") {
  const auto& gd = riemann();
  CHECK_THROWS_AS(identity_suite(gd, 0, 1), ValidationError);
  const auto a = identity_suite(gd, 4, 9);
  const auto b = identity_suite(gd, 4, 9);
  REQUIRE(a.entries.size() == b.entries.size());
  CHECK(std::string(a.entries[0].kind) == "shock");
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].residuals == b.entries[i].residuals);
    CHECK(a.entries[i].zeta.x_c == b.entries[i].zeta.x_c);
  }
  const double order = std::log2(a.max_residual(5) / a.max_residual(7)) / 2.0;
  CHECK(order >= 1.8);
}

TEST_CASE("merge bump detects a broken Kirchhoff law") {
  const auto S0 = action("0.05*log(sech((x+0.5)/0.05)) + 0.05*log(sech((x-0.5)/0.05))",
                         "-tanh((x+0.5)/0.05) - tanh((x-0.5)/0.05)",
                         "-sech((x+0.5)/0.05)^2/0.05 - sech((x-0.5)/0.05)^2/0.05");
  const auto f = fan(burgers(), S0, -4.0, 4.0, 3201, 1.0);
  const auto good = build_density(f, burgers(), Expression::constant(1.0));
  DensityOptions o;
  o.kirchhoff_factor = 1.1;
  const auto bad = build_density(f, burgers(), Expression::constant(1.0), {}, o);
  const auto rg = identity_suite(good, 1, 4);
  const auto rb = identity_suite(bad, 1, 4);
  const IdentityEntry* mg = nullptr;
  const IdentityEntry* mb = nullptr;
  for (const auto& e : rg.entries) mg = std::string(e.kind) == "merge" ? &e : mg;
  for (const auto& e : rb.entries) mb = std::string(e.kind) == "merge" ? &e : mb;
  REQUIRE(mg != nullptr);
  REQUIRE(mb != nullptr);
  CHECK(mg->residuals.back() <= 1e-4 * mg->zeta.norm());
  CHECK(mb->residuals.back() >= 10.0 * mg->residuals.back());
}

TEST_CASE("HJ residual") {
  const auto xs = uniform_grid(-2.0, 2.0, 400);
  std::vector<EssentialSolution> exact, flat;
  for (int k = 0; k < 400; ++k) {
    const double t = 0.5 + 0.5 * k / 399.0;
    EssentialSolution e, c;
    e.t = c.t = t;
    e.x = c.x = xs;
    for (double x : xs) {
      e.S.push_back(x * x / (2 * (1 + t)));
      c.S.push_back(0.3);
    }
    e.branch_id.assign(xs.size(), 0);
    c.branch_id.assign(xs.size(), 0);
    exact.push_back(e);
    flat.push_back(c);
  }
  CHECK(hj_residual(exact, burgers()) <= 1e-5);
  CHECK(hj_residual(flat, burgers()) == 0.0);

  // Jump symbol: characteristics agree with Hopf-Lax and satisfy the equation.
  const auto S0 = tanh_data();
  const auto f = fan(pure_jump(), S0, -12.0, 7.0, 1901, 0.6);
  const auto grid = uniform_grid(-2.0, 2.0, 201);
  std::vector<EssentialSolution> series;
  for (double t : {0.499, 0.5, 0.501}) series.push_back(essential(slice_at(*f, t), pure_jump(), grid));
  CHECK(hj_residual(series, pure_jump()) <= 1e-3);
  for (std::size_t i = 0; i < grid.size(); i += 20) {
    CHECK(std::fabs(series[1].S[i] - hopf_lax(pure_jump(), S0, grid[i], 0.5)) <= 1e-3);
  }
}

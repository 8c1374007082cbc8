#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tunnelshock/density.hpp"
#include "tunnelshock/errors.hpp"

using namespace tunnelshock;
using namespace fixtures;

TEST_CASE("Cauchy formula on the rarefaction") {
  const auto f = fan(burgers(), action("x^2/2", "x", "1"), -3.0, 3.0, 301, 1.0);
  const auto gd = transport_R(f, burgers(), Expression::constant(1.0));
  for (double t : {0.0, 0.5, 1.0}) {
    const auto sl = gd.slice(t);
    for (double x = -1.5; x <= 1.5; x += 0.25) {
      const auto pt = sl.at(x);
      REQUIRE(pt.has_value());
      CHECK(pt->R == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-10));
    }
  }
}

TEST_CASE("identity flow keeps rho0") {
  const auto f = fan(burgers(), action("0", "0", "0"), -3.0, 3.0, 301, 1.0);
  const auto gd = transport_R(f, burgers(), expr("exp(-x^2)"));
  const auto sl = gd.slice(1.0);
  for (double x = -2.0; x <= 2.0; x += 0.5) CHECK(sl.at(x)->R == doctest::Approx(std::exp(-x * x)).epsilon(1e-10));
}

TEST_CASE("exact Riemann amplitude") {
  const auto f = fan(burgers(), riemann_data(1.0, -1.0), -3.0, 3.0, 2401, 1.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  REQUIRE(gd.shocks().size() == 1);
  const int id = gd.shocks()[0].id;
  for (double t : {0.25, 0.5, 1.0}) CHECK(gd.amplitude(id, t) == doctest::Approx(2.0 * t).epsilon(1e-2));
  const auto s = gd.shock_at(id, 1.0);
  CHECK(std::fabs(s.c) <= 2e-3);
  CHECK(s.R_l == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.R_r == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("tanh amplitude grows from zero") {
  const auto f = fan(burgers(), tanh_data(), -5.0, 5.0, 2001, 3.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  REQUIRE(gd.shocks().size() == 1);
  const auto& path = gd.shocks()[0].path;
  CHECK(path.front().e == doctest::Approx(0.0));
  for (std::size_t i = 1; i < path.size(); ++i) {
    CHECK(path[i].e >= 0.0);
    CHECK(path[i].de >= 0.0);
    CHECK(path[i].e >= path[i - 1].e);
  }
}

TEST_CASE("zero jump gives no inflow") {
  const auto f = fan(burgers(), tanh_data(), -5.0, 5.0, 401, 2.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  ShockSample s;
  s.u_l = s.u_r = s.c = 0.4;
  s.R_l = s.R_r = 1.3;
  CHECK(gd.amplitude_rate(s, 0.7) == 0.0);
}

TEST_CASE("Kirchhoff balance at a merge") {
  const auto S0 = action("0.05*log(sech((x+0.5)/0.05)) + 0.05*log(sech((x-0.5)/0.05))",
                         "-tanh((x+0.5)/0.05) - tanh((x-0.5)/0.05)",
                         "-sech((x+0.5)/0.05)^2/0.05 - sech((x-0.5)/0.05)^2/0.05");
  const auto f = fan(burgers(), S0, -4.0, 4.0, 3201, 1.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  REQUIRE(gd.merges().size() == 1);
  const auto& ev = gd.merges()[0];
  double parents = 0.0;
  for (int p : ev.parents) parents += gd.amplitude(p, ev.t);
  const auto& child = gd.shocks()[static_cast<std::size_t>(ev.child)];
  CHECK(child.path.front().e == doctest::Approx(parents).epsilon(1e-12));
  // Each parent carries about 2 t of mass at the merge (t = 0.5).
  CHECK(parents == doctest::Approx(2.0).epsilon(1e-2));

  DensityOptions off;
  off.kirchhoff_factor = 1.1;
  const auto gd2 = build_density(f, burgers(), Expression::constant(1.0), {}, off);
  const auto& child2 = gd2.shocks()[static_cast<std::size_t>(gd2.merges()[0].child)];
  CHECK(child2.path.front().e == doctest::Approx(1.1 * parents).epsilon(1e-9));
}

TEST_CASE("mass balance with a = 0") {
  const auto f = fan(burgers(), tanh_data(), -5.0, 5.0, 2001, 3.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  const double M0 = gd.initial_mass();
  for (double t : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    const auto m = masses(gd, t);
    CHECK(std::fabs(m.total() - M0) / M0 <= 1e-5);
  }
}

TEST_CASE("Madelung field") {
  const auto f = fan(burgers(), action("x^2/2", "x", "1"), -4.0, 4.0, 801, 1.0);
  const auto gd = transport_R(f, burgers(), Expression::constant(1.0));
  const double h = 0.05;
  const auto xs = uniform_grid(-1.0, 1.0, 101);
  const auto es = essential(slice(*f, 1.0), burgers(), xs);
  const auto mf = madelung_assemble(es, gd, h);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double exact = std::pow(2.0, -0.5) * std::exp(-xs[i] * xs[i] / (4.0 * h));
    CHECK(std::fabs(mf.value[i] / exact - 1.0) <= 1e-6);
  }

  const auto g = fan(burgers(), action("0.3", "0", "0"), -2.0, 2.0, 201, 1.0);
  const auto gg = transport_R(g, burgers(), Expression::constant(1.0));
  const auto flat = madelung_assemble(essential(slice(*g, 1.0), burgers(), xs), gg, 0.1);
  for (double v : flat.value) CHECK(v == doctest::Approx(std::exp(-3.0)));

  const auto ft = fan(burgers(), tanh_data(), -5.0, 5.0, 1001, 2.0);
  const auto gt = build_density(ft, burgers(), Expression::constant(1.0));
  const auto near = madelung_assemble(essential(slice(*ft, 2.0), burgers(), {0.0, 0.5}), gt, 0.1, 0.05);
  CHECK(near.masked[0]);
  CHECK_FALSE(near.masked[1]);
}

TEST_CASE("Hermite dense output of the amplitude") {
  const auto f = fan(burgers(), riemann_data(1.0, -1.0), -3.0, 3.0, 1201, 1.0);
  const auto gd = build_density(f, burgers(), Expression::constant(1.0));
  const auto& s = gd.shocks()[0];
  CHECK(amplitude_dense(s, 0.555) == doctest::Approx(1.11).epsilon(1e-2));
}

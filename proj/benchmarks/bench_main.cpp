#include <memory>

#include <benchmark/benchmark.h>

#include "tunnelshock/density.hpp"
#include "tunnelshock/lattice.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/oracle.hpp"
#include "tunnelshock/verify.hpp"

using namespace tunnelshock;

namespace {

SymbolModel burgers() { return SymbolModel(Expression::parse("0.5"), Expression::parse("0")); }

InitialAction tanh_data() {
  return {Expression::parse("log(sech(x))"), Expression::parse("-tanh(x)"), Expression::parse("-sech(x)^2")};
}

void BM_ExpressionEval(benchmark::State& state) {
  const Expression e = Expression::parse("0.5*x^2 + 0.2*cos(x) - log(sech(x))");
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(e(x));
    x += 1e-9;
  }
}
BENCHMARK(BM_ExpressionEval);

void BM_Fan(benchmark::State& state) {
  const SymbolModel m = burgers();
  const InitialAction S0 = tanh_data();
  FanOptions o;
  o.T = 2.0;
  o.h_t = 0.01;
  o.threads = 1;
  const auto grid = uniform_grid(-4, 4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_fan(m, S0, grid, o));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fan)->Arg(401)->Arg(1601)->Unit(benchmark::kMillisecond);

void BM_Essential(benchmark::State& state) {
  const SymbolModel m = burgers();
  FanOptions o;
  o.T = 2.0;
  const Fan fan = integrate_fan(m, tanh_data(), uniform_grid(-4, 4, 1601), o);
  const LagrangianCurve curve = slice(fan, 2.0);
  const auto xs = uniform_grid(-3, 3, 601);
  for (auto _ : state) benchmark::DoNotOptimize(essential(curve, m, xs));
}
BENCHMARK(BM_Essential)->Unit(benchmark::kMillisecond);

void BM_Density(benchmark::State& state) {
  const SymbolModel m = burgers();
  FanOptions o;
  o.T = 2.0;
  auto fan = std::make_shared<const Fan>(integrate_fan(m, tanh_data(), uniform_grid(-4, 4, 1601), o));
  for (auto _ : state) benchmark::DoNotOptimize(build_density(fan, m, Expression::parse("1")));
}
BENCHMARK(BM_Density)->Unit(benchmark::kMillisecond);

void BM_IdentityResidual(benchmark::State& state) {
  const SymbolModel m = burgers();
  FanOptions o;
  o.T = 2.0;
  auto fan = std::make_shared<const Fan>(integrate_fan(m, tanh_data(), uniform_grid(-4, 4, 1601), o));
  const GeneralizedDensity gd = build_density(fan, m, Expression::parse("1"));
  const BumpTestFunction z{0.0, 1.5, 0.5, 0.4};
  for (auto _ : state) benchmark::DoNotOptimize(identity_residual(gd, z, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_IdentityResidual)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_HopfLax(benchmark::State& state) {
  const SymbolModel m = burgers();
  const InitialAction S0 = tanh_data();
  for (auto _ : state) benchmark::DoNotOptimize(hopf_lax(m, S0, 0.3, 1.5));
}
BENCHMARK(BM_HopfLax)->Unit(benchmark::kMicrosecond);

void BM_Lattice(benchmark::State& state) {
  const SymbolModel m = burgers();
  const LatticeField u0 =
      lattice_initial([](double x) { return 0.5 * x * x; }, [](double) { return 1.0; }, 0.1, -3.0, 3.0, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(kf_lattice(m, u0, 0.1));
}
BENCHMARK(BM_Lattice)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/density.hpp"
#include "tunnelshock/lattice.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/oracle.hpp"
#include "tunnelshock/regularize.hpp"
#include "tunnelshock/verify.hpp"
#include "tunnelshock_cli/run.hpp"
#include "tunnelshock_cli/scenario.hpp"

namespace {

using namespace tunnelshock;
using tunnelshock::cli::Scenario;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::shared_ptr<const Fan> fan_of(const Scenario& sc) {
  return std::make_shared<const Fan>(integrate_fan(sc.symbol, sc.initial, sc.x0_grid(), sc.fan_options(), sc.a_field));
}

GeneralizedDensity density_of(const Scenario& sc) {
  return build_density(fan_of(sc), sc.symbol, sc.rho0, sc.a_field);
}

Outcome focal_point() {
  const Scenario sc = cli::preset("burgers-tanh");
  const Singularity s = first_singularity(*fan_of(sc));
  const bool ok = std::fabs(s.t - 1.0) <= 1e-3 && std::fabs(s.x) <= 1e-3;
  return {ok, fmt::format("t* = {:.9f}, x* = {:.3e} (tol 1e-3)", s.t, s.x)};
}

double hopf_lax_gap(const Scenario& sc) {
  const auto fan = fan_of(sc);
  const auto xs = uniform_grid(-3.0, 3.0, 121);
  HopfLaxOptions ho;
  ho.grid = sc.hopf_lax_grid;
  ho.momentum = sc.hopf_lax_momentum;
  double worst = 0.0;
  for (double t : {0.5, 1.5, 3.0}) {
    const EssentialSolution es = essential(slice(*fan, t), sc.symbol, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = std::fabs(es.S[i] - hopf_lax(sc.symbol, sc.initial, xs[i], t, ho));
      worst = std::isnan(d) ? INFINITY : std::max(worst, d);
    }
  }
  return worst;
}

Outcome hopf_lax_equivalence() {
  const double burgers = hopf_lax_gap(cli::preset("burgers-tanh"));
  const double jump = hopf_lax_gap(cli::preset("jump"));
  const bool ok = burgers <= 1e-3 && jump <= 1e-3;
  return {ok, fmt::format("sup |S - S_HL|: Burgers {:.3e}, jump {:.3e} (tol 1e-3)", burgers, jump)};
}

Outcome riemann_amplitude() {
  const GeneralizedDensity gd = density_of(cli::preset("riemann"));
  if (gd.shocks().size() != 1) return {false, fmt::format("{} shocks tracked, expected 1", gd.shocks().size())};
  const ShockSample s = gd.shock_at(gd.shocks()[0].id, 1.0);
  const double rel = std::fabs(s.e - 2.0) / 2.0;
  const bool ok = std::fabs(s.c) <= 2e-3 && rel <= 1e-2;
  return {ok, fmt::format("c(1) = {:.3e} (tol 2e-3), e(1) = {:.9f}, relative error {:.3e} (tol 1e-2)", s.c, s.e, rel)};
}

Outcome kirchhoff_merge() {
  const GeneralizedDensity gd = density_of(cli::preset("three-plateau"));
  if (gd.merges().size() != 1) return {false, fmt::format("{} merges, expected 1", gd.merges().size())};
  const ShockEvent& ev = gd.merges()[0];
  double parents = 0.0;
  for (int p : ev.parents) parents += gd.amplitude(p, ev.t);
  const ShockRecord& child = gd.shocks()[static_cast<std::size_t>(ev.child)];
  const double e3 = child.path.front().e;
  const double balance = std::fabs(e3 - parents) / parents;
  // Outer plateaus u = 2 and u = -2 with R = 1, merged shock at rest: de/dt = 2 + 2.
  const double outer = 1.0 * (2.0 - 0.0) - 1.0 * (-2.0 - 0.0);
  double rate = 0.0;
  for (const auto& s : child.path) {
    if (s.t <= ev.t + 0.05) continue;
    rate = std::max(rate, std::fabs(s.de - outer) / outer);
  }
  const bool ok = balance <= 1e-3 && rate <= 1e-2;
  return {ok, fmt::format("t_merge = {:.6f}, |e3 - (e1 + e2)| / (e1 + e2) = {:.3e} (tol 1e-3), post-merge de/dt "
                          "relative error {:.3e} (tol 1e-2)",
                          ev.t, balance, rate)};
}

Outcome integral_identity() {
  const Scenario sc = cli::preset("riemann");
  const GeneralizedDensity gd = density_of(sc);
  const IdentityReport good = identity_suite(gd, sc.bumps, sc.seed);
  GeneralizedDensity perturbed = gd;
  for (auto& s : perturbed.mutable_shocks()) {
    for (auto& p : s.path) {
      p.e *= 1.1;
      p.de *= 1.1;
    }
  }
  const IdentityReport bad = identity_suite(perturbed, sc.bumps, sc.seed);
  const double order = std::log2(good.max_residual(5) / good.max_residual(7)) / 2.0;
  const double inflation = bad.max_residual(7) / good.max_residual(7);
  const bool ok = order >= 1.8 && inflation >= 10.0;
  return {ok, fmt::format("order over levels 5->7 = {:.3f} (min 1.8), residual(7) = {:.3e}, with 1.1 e: x{:.1f} (min 10)",
                          order, good.max_residual(7), inflation)};
}

Outcome mass_balance() {
  const GeneralizedDensity gd = density_of(cli::preset("burgers-tanh"));
  const double M0 = gd.initial_mass();
  double worst = 0.0;
  for (int k = 0; k <= 30; ++k) {
    const MassRecord m = masses(gd, 0.1 * k);
    worst = std::max(worst, std::fabs(m.total() - M0) / M0);
  }
  return {worst <= 1e-5, fmt::format("max relative drift of mass on [0, 3] = {:.3e} (tol 1e-5)", worst)};
}

Outcome regularization_limit() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"riemann", "burgers-tanh"}) {
    const Scenario sc = cli::preset(name);
    const GeneralizedDensity gd = density_of(sc);
    LimitStudyOptions o;
    o.epsilons = sc.epsilons;
    o.times = sc.limit_times.empty() ? std::vector<double>{sc.T} : sc.limit_times;
    o.profile = sc.profile;
    o.C_target = sc.C_target;
    const LimitReport rep = limit_study(gd, sc.initial, o);
    double min_ratio = INFINITY;
    for (const auto& r : rep.rows) min_ratio = std::min(min_ratio, r.min_J_over_eps);
    const bool bounded = min_ratio >= 0.5 * sc.C_target * (1.0 - 1e-9);
    ok = ok && rep.R_decreasing && rep.e_decreasing && bounded;
    detail += fmt::format("{}{}: sup R error", detail.empty() ? "" : "; ", name);
    for (const auto& r : rep.rows) detail += fmt::format(" {:.2e}", r.sup_R_error);
    detail += ", e error";
    for (const auto& r : rep.rows) detail += fmt::format(" {:.2e}", r.e_error);
    detail += fmt::format(", min J/eps {:.3f}", min_ratio);
  }
  return {ok, detail};
}

TunnelTable tunnel_table(const Scenario& sc, const std::vector<double>& hs) {
  const GeneralizedDensity gd = density_of(sc);
  std::vector<LatticeField> fields;
  for (double h : hs) {
    const auto u0 = lattice_initial([&](double x) { return sc.initial.action(x); },
                                    [&](double x) { return std::sqrt(sc.rho0(x)); }, h, sc.lattice_x_min,
                                    sc.lattice_x_max, sc.lattice_dx);
    fields.push_back(kf_lattice(sc.symbol, u0, sc.tunnel_t));
  }
  TunnelCompareOptions o;
  o.t = sc.tunnel_t;
  o.x_lo = sc.tunnel_x_lo;
  o.x_hi = sc.tunnel_x_hi;
  return tunnel_compare(fields, gd, o);
}

Outcome tunnel_asymptotics() {
  const TunnelTable g = tunnel_table(cli::preset("gaussian"), {0.05});
  const TunnelTable q = tunnel_table(cli::preset("quadratic-potential"), {0.2, 0.1, 0.05});
  const bool ok = g.rows[0].relative <= 1e-3 && q.fitted_order >= 0.8;
  std::string e;
  for (const auto& r : q.rows) e += fmt::format(" {:.3e}", r.error);
  return {ok, fmt::format("Gaussian relative error at h = 0.05: {:.3e} (tol 1e-3); quadratic potential E(h) ={}, "
                          "fitted order {:.3f} (min 0.8)",
                          g.rows[0].relative, e, q.fitted_order)};
}

Outcome jacobian_and_legendre() {
  double worst = 0.0;
  std::string where;
  for (const auto& name : cli::preset_names()) {
    const JacobianReport r = jacobian_check(*fan_of(cli::preset(name)));
    if (r.max_deviation >= worst) {
      worst = r.max_deviation;
      where = fmt::format("{} t = {}", name, r.t);
    }
  }
  const SymbolModel mixed(Expression::constant(0.5), Expression::parse("0.2*cos(x)"),
                          {Jump{1.0, Expression::constant(1.0)}, Jump{-0.5, Expression::parse("1+0.5*tanh(x)")}});
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> X(-3.0, 3.0), P(-3.0, 3.0);
  double duality = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double x = X(rng);
    const double v = mixed.dP_dp(x, P(rng));
    const LegendrePair lp = mixed.legendre(x, v);
    duality = std::max(duality, std::fabs(mixed.P(x, lp.p) + lp.L - lp.p * v) / std::max(1.0, std::fabs(lp.p * v)));
  }
  const bool ok = worst <= 1e-6 && duality <= 1e-10;
  return {ok, fmt::format("max |J - J_fd| / max(|J|, 1) = {:.3e} ({}) (tol 1e-6); Legendre residual {:.3e} (tol 1e-10)",
                          worst, where, duality)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  struct Job {
    cli::Command command;
    const char* preset;
    cli::OracleKind oracle = cli::OracleKind::hopf_lax;
  };
  const Job jobs[] = {{cli::Command::evolve, "three-plateau"},
                      {cli::Command::shock, "cos-potential"},
                      {cli::Command::verify, "riemann"},
                      {cli::Command::oracle, "burgers-tanh", cli::OracleKind::hopf_lax},
                      {cli::Command::oracle, "riemann-2-0", cli::OracleKind::godunov}};
  const fs::path root = fs::temp_directory_path() / "tunnelshock-determinism";
  std::size_t files = 0;
  for (const auto& job : jobs) {
    std::vector<std::string> outputs[2];
    const unsigned threads[2] = {1, 3};
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / fmt::format("{}-{}-{}", cli::to_string(job.command), job.preset, threads[k]);
      fs::remove_all(dir);
      cli::RunOptions o;
      o.out_dir = dir.string();
      o.threads = threads[k];
      o.seed = 42;
      o.oracle = job.oracle;
      const cli::RunResult r = cli::run(job.command, cli::preset(job.preset), o);
      for (const auto& f : r.files) outputs[k].push_back(slurp(f));
    }
    if (outputs[0] != outputs[1]) {
      return {false, fmt::format("{} on {} differs between 1 and 3 threads", cli::to_string(job.command), job.preset)};
    }
    files += outputs[0].size();
  }
  return {true, fmt::format("{} CSV files byte-identical with 1 and 3 threads (seed 42)", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"focal-point detection", focal_point},
      {"Hopf-Lax equivalence", hopf_lax_equivalence},
      {"exact Riemann amplitude", riemann_amplitude},
      {"Kirchhoff merge", kirchhoff_merge},
      {"integral-identity certification", integral_identity},
      {"mass balance", mass_balance},
      {"regularization limit", regularization_limit},
      {"tunnel asymptotics", tunnel_asymptotics},
      {"Jacobian cross-check and Legendre duality", jacobian_and_legendre},
      {"determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failed;
    std::cout << fmt::format("{} {:2d} {}: {} [{:.1f} s]", out.pass ? "PASS" : "FAIL", index, name, out.detail, secs)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} acceptance criteria passed", index - failed, index) << std::endl;
  return failed == 0 ? 0 : 1;
}

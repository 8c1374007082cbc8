#include "tunnelshock_cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>

#include <boost/version.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tunnelshock/density.hpp"
#include "tunnelshock/errors.hpp"
#include "tunnelshock/lattice.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/oracle.hpp"
#include "tunnelshock/parallel.hpp"
#include "tunnelshock/regularize.hpp"
#include "tunnelshock/verify.hpp"
#include "tunnelshock_cli/csv.hpp"

#ifndef TUNNELSHOCK_VERSION
#define TUNNELSHOCK_VERSION "0.0.0"
#endif

namespace tunnelshock::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

class Context {
 public:
  Context(const Scenario& sc, const RunOptions& o) : sc_(sc), threads_(o.threads) {
    dir_ = o.out_dir.empty() ? sc.out_dir : o.out_dir;
    fs::create_directories(dir_);
  }

  CsvWriter csv(const std::string& name, std::vector<std::string> columns) {
    const std::string path = (fs::path(dir_) / name).string();
    result.files.push_back(path);
    return CsvWriter(path, std::move(columns));
  }

  void note(const std::string& name, double value) { result.summary.emplace_back(name, value); }

  std::shared_ptr<const Fan> fan() {
    if (!fan_) {
      FanOptions o = sc_.fan_options();
      o.threads = threads_;
      fan_ = std::make_shared<const Fan>(integrate_fan(sc_.symbol, sc_.initial, sc_.x0_grid(), o, sc_.a_field));
    }
    return fan_;
  }

  const GeneralizedDensity& density() {
    if (!gd_) gd_ = std::make_unique<GeneralizedDensity>(build_density(fan(), sc_.symbol, sc_.rho0, sc_.a_field));
    return *gd_;
  }

  const Scenario& scenario() const { return sc_; }
  unsigned threads() const { return threads_; }
  const std::string& dir() const { return dir_; }

  RunResult result;

 private:
  const Scenario& sc_;
  unsigned threads_;
  std::string dir_;
  std::shared_ptr<const Fan> fan_;
  std::unique_ptr<GeneralizedDensity> gd_;
};

/// Snapshot times clipped to the fan and sorted.
std::vector<double> snapshot_times(const Scenario& sc) {
  std::vector<double> ts = sc.snapshots;
  for (double& t : ts) t = std::min(t, sc.T);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

void write_fan(Context& cx) {
  const Fan& fan = *cx.fan();
  auto out = cx.csv("fan.csv", {"t", "x0", "x", "p", "S", "J", "a_int"});
  std::vector<double> ts = snapshot_times(cx.scenario());
  if (ts.empty() || ts.front() > 0.0) ts.insert(ts.begin(), 0.0);
  for (double t : ts) {
    for (std::size_t r = 0; r < fan.rows(); ++r) {
      const TrajectoryPoint y = fan.state_at(r, t);
      out.row({t, fan.x0(r), y.x, y.p, y.S, y.J, y.a_int});
    }
  }
  const JacobianReport jr = jacobian_check(fan);
  cx.note("jacobian_max_deviation", jr.max_deviation);
}

void write_slices(Context& cx) {
  const Scenario& sc = cx.scenario();
  const Fan& fan = *cx.fan();
  const GeneralizedDensity& gd = cx.density();
  const std::vector<double> xs = sc.x_grid();
  auto ess = cx.csv("essential.csv", {"t", "x", "S", "u", "branch_id"});
  auto den = cx.csv("density.csv", {"t", "x", "R"});
  for (double t : snapshot_times(sc)) {
    const EssentialSolution es = essential(slice_at(fan, t), sc.symbol, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) ess.row({t, xs[i], es.S[i], es.u[i], std::int64_t{es.branch_id[i]}});
    const DensitySlice sl = gd.slice(t);
    for (double x : xs) {
      const auto pt = sl.at(x);
      den.row({t, x, pt ? pt->R : kNaN});
    }
  }
}

void write_amplitudes(Context& cx) {
  const GeneralizedDensity& gd = cx.density();
  auto out = cx.csv("amplitudes.csv", {"t", "shock_id", "e"});
  for (const auto& s : gd.shocks()) {
    for (const auto& p : s.path) out.row({p.t, std::int64_t{s.id}, p.e});
  }
}

void write_masses(Context& cx) {
  const GeneralizedDensity& gd = cx.density();
  const Fan& fan = *cx.fan();
  auto out = cx.csv("masses.csv", {"t", "smooth_mass", "singular_mass", "total"});
  const std::size_t stride = std::max<std::size_t>(1, (fan.levels() - 1) / 20);
  std::vector<double> ts;
  for (std::size_t k = 0; k < fan.levels(); k += stride) ts.push_back(fan.time(k));
  if (ts.back() < fan.T()) ts.push_back(fan.T());
  double worst = 0.0;
  const double m0 = gd.initial_mass();
  for (double t : ts) {
    const MassRecord m = masses(gd, t);
    out.row({t, m.smooth, m.singular, m.total()});
    worst = std::max(worst, std::fabs(m.total() - m0) / m0);
  }
  cx.note("initial_mass", m0);
  cx.note("mass_drift_max_relative", worst);
}

void write_shocks(Context& cx) {
  const GeneralizedDensity& gd = cx.density();
  auto out = cx.csv("shocks.csv", {"shock_id", "t", "x_s", "c", "p_l", "p_r", "R_l", "R_r", "e"});
  for (const auto& s : gd.shocks()) {
    for (const auto& p : s.path) out.row({std::int64_t{s.id}, p.t, p.x, p.c, p.p_l, p.p_r, p.R_l, p.R_r, p.e});
  }
  auto mg = cx.csv("merges.csv", {"t", "x", "parent_1", "parent_2", "child"});
  for (const auto& m : gd.merges()) {
    mg.row({m.t, m.x, std::int64_t{m.parents.at(0)}, std::int64_t{m.parents.at(1)}, std::int64_t{m.child}});
  }
  cx.note("shocks", static_cast<double>(gd.shocks().size()));
  cx.note("merges", static_cast<double>(gd.merges().size()));
}

void cmd_evolve(Context& cx) {
  write_fan(cx);
  write_slices(cx);
  write_amplitudes(cx);
  write_masses(cx);
}

void cmd_singularity(Context& cx) {
  const Fan& fan = *cx.fan();
  const Singularity first = first_singularity(fan);
  auto all = cx.csv("singularities.csv", {"t", "x", "x0", "k"});
  for (const auto& s : singularities(fan)) all.row({s.t, s.x, s.x0, s.k});
  auto sum = cx.csv("singularity.csv", {"t_star", "x_star", "x0_star", "k"});
  sum.row({first.t, first.x, first.x0, first.k});
  cx.note("t_star", first.t);
  cx.note("x_star", first.x);
}

void cmd_shock(Context& cx) {
  write_shocks(cx);
  write_amplitudes(cx);
}

void cmd_verify(Context& cx, std::uint64_t seed) {
  const Scenario& sc = cx.scenario();
  const GeneralizedDensity& gd = cx.density();
  IdentityOptions io;
  io.levels = sc.levels;
  io.threads = cx.threads();
  const IdentityReport rep = identity_suite(gd, sc.bumps, seed, io);
  auto out = cx.csv("identity.csv", {"bump_id", "x_c", "t_c", "level", "residual", "order", "r_x", "r_t", "kind"});
  for (const auto& e : rep.entries) {
    for (std::size_t i = 0; i < e.levels.size(); ++i) {
      const Cell order = i == 0 ? Cell{std::string{}} : Cell{e.orders[i - 1]};
      out.row({i64(e.bump), e.zeta.x_c, e.zeta.t_c, std::int64_t{e.levels[i]}, e.residuals[i], order, e.zeta.r_x,
                e.zeta.r_t, std::string(e.kind)});
    }
  }
  cx.note("max_residual_finest", rep.max_residual(sc.levels.back()));
  if (sc.levels.size() > 1) cx.note("min_order", rep.min_order());

  // S_t + P(x, S_x) on the output grid at 20 equally spaced times, with
  // slices 1e-3 apart in time for the t-difference.
  const Fan& fan = gd.fan();
  const double tau = 1e-3;
  double hj = 0.0;
  for (int j = 1; j <= 20; ++j) {
    const double t = std::min(fan.T() * j / 20.0, fan.T() - tau);
    std::vector<EssentialSolution> triple;
    for (double s : {t - tau, t, t + tau}) triple.push_back(essential(slice_at(fan, s), sc.symbol, sc.x_grid()));
    hj = std::max(hj, hj_residual(triple, sc.symbol));
  }
  cx.note("hj_residual", hj);
}

void cmd_hopf_lax(Context& cx) {
  const Scenario& sc = cx.scenario();
  if (!sc.symbol.homogeneous()) throw ValidationError("the Hopf-Lax oracle needs a spatially homogeneous symbol");
  const Fan& fan = *cx.fan();
  HopfLaxOptions ho;
  ho.grid = sc.hopf_lax_grid;
  ho.momentum = sc.hopf_lax_momentum;
  const std::vector<double> xs = sc.x_grid();
  auto out = cx.csv("hopf_lax.csv", {"t", "x", "S_hopf_lax", "S_characteristics", "difference"});
  double worst = 0.0;
  std::size_t uncovered = 0;
  for (double t : snapshot_times(sc)) {
    if (!(t > 0.0)) continue;
    const EssentialSolution es = essential(slice_at(fan, t), sc.symbol, xs);
    std::vector<double> hl(xs.size());
    parallel_for(
        xs.size(), [&](std::size_t i) { hl[i] = hopf_lax(sc.symbol, sc.initial, xs[i], t, ho); }, cx.threads());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = es.S[i] - hl[i];
      if (std::isfinite(d)) {
        worst = std::max(worst, std::fabs(d));
      } else {
        ++uncovered;
      }
      out.row({t, xs[i], hl[i], es.S[i], d});
    }
  }
  cx.note("max_difference", worst);
  cx.note("uncovered", static_cast<double>(uncovered));
}

void cmd_godunov(Context& cx) {
  const Scenario& sc = cx.scenario();
  GodunovOptions go;
  go.x_min = sc.x_min;
  go.x_max = sc.x_max;
  go.cells = sc.godunov_cells;
  go.T = sc.T;
  const GodunovResult g = godunov(sc.symbol, [&](double x) { return sc.initial.momentum(x); }, go);
  auto out = cx.csv("godunov.csv", {"t", "x", "v"});
  for (std::size_t i = 0; i < g.x.size(); ++i) out.row({g.t, g.x[i], g.v[i]});
  auto sh = cx.csv("godunov_shocks.csv", {"t", "x_s"});
  for (double x : g.shocks) sh.row({g.t, x});
  cx.note("steps", static_cast<double>(g.steps));
}

std::vector<LatticeField> lattices(Context& cx, bool write) {
  const Scenario& sc = cx.scenario();
  std::vector<LatticeField> out(sc.tunnel_h.size());
  auto S0 = [&](double x) { return sc.initial.action(x); };
  auto phi0 = [&](double x) { return std::sqrt(sc.rho0(x)); };
  for (std::size_t i = 0; i < sc.tunnel_h.size(); ++i) {
    const LatticeField u0 = lattice_initial(S0, phi0, sc.tunnel_h[i], sc.lattice_x_min, sc.lattice_x_max, sc.lattice_dx);
    out[i] = kf_lattice(sc.symbol, u0, sc.tunnel_t);
  }
  if (write) {
    auto csv = cx.csv("lattice.csv", {"h", "t", "x", "u", "minus_h_log_u"});
    for (const auto& f : out) {
      for (std::size_t j = 0; j < f.x.size(); ++j) {
        csv.row({f.h, f.t, f.x[j], f.values[j], -f.h * std::log(f.values[j])});
      }
    }
  }
  return out;
}

void cmd_tunnel(Context& cx) {
  const Scenario& sc = cx.scenario();
  const std::vector<LatticeField> fields = lattices(cx, false);
  TunnelCompareOptions to;
  to.t = sc.tunnel_t;
  to.x_lo = sc.tunnel_x_lo;
  to.x_hi = sc.tunnel_x_hi;
  const TunnelTable table = tunnel_compare(fields, cx.density(), to);
  auto out = cx.csv("tunnel.csv", {"h", "E_of_h", "relative", "points", "fitted_order"});
  for (const auto& r : table.rows) out.row({r.h, r.error, r.relative, i64(r.points), table.fitted_order});
  cx.note("fitted_order", table.fitted_order);
}

void cmd_limit(Context& cx) {
  const Scenario& sc = cx.scenario();
  LimitStudyOptions lo;
  lo.epsilons = sc.epsilons;
  lo.times = sc.limit_times;
  lo.profile = sc.profile;
  lo.C_target = sc.C_target;
  lo.threads = cx.threads();
  const LimitReport rep = limit_study(cx.density(), sc.initial, lo);
  auto out = cx.csv("limit.csv", {"epsilon", "beta", "sup_R_error", "e_error_at_T", "minJ_over_eps", "A_shift",
                                  "collar", "compared"});
  for (const auto& r : rep.rows) {
    out.row({r.epsilon, r.beta, r.sup_R_error, r.e_error, r.min_J_over_eps, r.A, r.collar, i64(r.compared)});
  }
  cx.note("R_decreasing", rep.R_decreasing ? 1.0 : 0.0);
  cx.note("e_decreasing", rep.e_decreasing ? 1.0 : 0.0);
}

void write_manifest(const Context& cx, Command command, const RunOptions& o, std::uint64_t seed) {
  using nlohmann::ordered_json;
  const Scenario& sc = cx.scenario();
  ordered_json m;
  m["tool"] = "tunnelshock";
  m["version"] = TUNNELSHOCK_VERSION;
  m["command"] = to_string(command);
  if (command == Command::oracle) m["oracle"] = to_string(o.oracle);
  m["argv"] = o.argv;
  m["seed"] = seed;
  m["threads"] = cx.threads() == 0 ? default_threads() : cx.threads();
  ordered_json input;
  input["origin"] = sc.origin;
  input["name"] = sc.name;
  ordered_json entries = ordered_json::object();
  for (const auto& [k, v] : sc.entries) entries[k] = v;
  input["entries"] = entries;
  m["scenario"] = input;
  m["libraries"] = {{"fmt", FMT_VERSION}, {"boost", BOOST_LIB_VERSION}};
  m["files"] = ordered_json::array();
  for (const auto& f : cx.result.files) m["files"].push_back(fs::path(f).filename().string());
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : cx.result.summary) summary[k] = v;
  m["summary"] = summary;
  std::ofstream out(fs::path(cx.dir()) / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::evolve: return "evolve";
    case Command::singularity: return "singularity";
    case Command::shock: return "shock";
    case Command::verify: return "verify";
    case Command::oracle: return "oracle";
    case Command::limit_study: return "limit-study";
  }
  return "?";
}

const char* to_string(OracleKind k) {
  switch (k) {
    case OracleKind::hopf_lax: return "hopf-lax";
    case OracleKind::godunov: return "godunov";
    case OracleKind::kf_lattice: return "kf-lattice";
    case OracleKind::tunnel_compare: return "tunnel-compare";
  }
  return "?";
}

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : {Command::evolve, Command::singularity, Command::shock, Command::verify, Command::oracle,
                    Command::limit_study}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

std::optional<OracleKind> parse_oracle(const std::string& name) {
  for (OracleKind k : {OracleKind::hopf_lax, OracleKind::godunov, OracleKind::kf_lattice, OracleKind::tunnel_compare}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

RunResult run(Command command, const Scenario& scenario, const RunOptions& options) {
  Context cx(scenario, options);
  const std::uint64_t seed = options.seed.value_or(scenario.seed);
  switch (command) {
    case Command::evolve: cmd_evolve(cx); break;
    case Command::singularity: cmd_singularity(cx); break;
    case Command::shock: cmd_shock(cx); break;
    case Command::verify: cmd_verify(cx, seed); break;
    case Command::limit_study: cmd_limit(cx); break;
    case Command::oracle:
      switch (options.oracle) {
        case OracleKind::hopf_lax: cmd_hopf_lax(cx); break;
        case OracleKind::godunov: cmd_godunov(cx); break;
        case OracleKind::kf_lattice: lattices(cx, true); break;
        case OracleKind::tunnel_compare: cmd_tunnel(cx); break;
      }
      break;
  }
  auto sum = cx.csv("summary.csv", {"quantity", "value"});
  for (const auto& [k, v] : cx.result.summary) sum.row({k, v});
  write_manifest(cx, command, options, seed);
  cx.result.out_dir = cx.dir();
  return cx.result;
}

}  // namespace tunnelshock::cli

#include "tunnelshock_cli/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "tunnelshock/errors.hpp"

namespace tunnelshock::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"scenario", {"name"}},
      {"symbol", {"A", "V", "momentum_min", "momentum_max"}},
      {"initial", {"S0", "dS0", "d2S0", "rho0", "phi0", "a"}},
      {"domain", {"x0_min", "x0_max", "x0_points", "T", "h_t", "substeps", "x_min", "x_max", "x_points", "snapshots"}},
      {"tunnel", {"h", "dx", "x_min", "x_max", "t", "x_lo", "x_hi"}},
      {"regularization", {"epsilon", "profile", "t1", "C_target", "times"}},
      {"verify", {"bumps", "seed", "levels"}},
      {"oracle", {"hopf_lax_grid", "hopf_lax_momentum", "godunov_cells"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string origin) : tree_(tree), origin_(std::move(origin)) {}

  std::optional<std::string> text(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '/'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ValidationError(fmt::format("{}: [{}] {}: {}", origin_, section, key, what));
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const auto v = text(section, key);
    if (!v) return fallback;
    return to_number(section, key, *v);
  }

  double to_number(const std::string& section, const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      fail(section, key, fmt::format("'{}' is not a number", v));
    }
  }

  long integer(const std::string& section, const std::string& key, long fallback, long min_value) const {
    const auto v = text(section, key);
    if (!v) return fallback;
    long n = 0;
    try {
      std::size_t used = 0;
      n = std::stol(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      fail(section, key, fmt::format("'{}' is not an integer", *v));
    }
    if (n < min_value) fail(section, key, fmt::format("must be at least {}", min_value));
    return n;
  }

  std::vector<double> list(const std::string& section, const std::string& key, std::vector<double> fallback) const {
    const auto v = text(section, key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(section, key, trim(item)));
    if (out.empty()) fail(section, key, "empty list");
    return out;
  }

  Expression expression(const std::string& section, const std::string& key, const std::string& fallback,
                        VariableSet vars = VariableSet::space_time()) const {
    const auto v = text(section, key);
    return parse(section, key, v ? *v : fallback, vars);
  }

  Expression parse(const std::string& section, const std::string& key, const std::string& src, VariableSet vars) const {
    try {
      return Expression::parse(src, vars);
    } catch (const ParseError& e) {
      fail(section, key, fmt::format("{} (offset {})", e.what(), e.offset()));
    }
  }

 private:
  const pt::ptree& tree_;
  std::string origin_;
};

}  // namespace

FanOptions Scenario::fan_options() const {
  FanOptions o;
  o.T = T;
  o.h_t = h_t;
  o.substeps = substeps;
  return o;
}

std::vector<double> Scenario::x0_grid() const { return uniform_grid(x0_min, x0_max, x0_points); }

std::vector<double> Scenario::x_grid() const { return uniform_grid(x_min, x_max, x_points); }

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("{}: line {}: {}", origin, e.line(), e.message()));
  }

  Scenario sc;
  sc.origin = origin;
  for (const auto& [section, body] : tree) {
    const bool jump = section.rfind("jump", 0) == 0;
    const auto known = known_keys().find(section);
    if (!jump && known == known_keys().end()) {
      throw ValidationError(fmt::format("{}: unknown section [{}]", origin, section));
    }
    if (body.empty() && !body.data().empty()) {
      throw ValidationError(fmt::format("{}: key '{}' outside a section", origin, section));
    }
    for (const auto& [key, value] : body) {
      const bool ok = jump ? (key == "nu" || key == "rate") : known->second.count(key) > 0;
      if (!ok) throw ValidationError(fmt::format("{}: unknown key [{}] {}", origin, section, key));
      sc.entries.emplace_back(section + "." + key, trim(value.data()));
    }
  }

  const Reader r(tree, origin);
  sc.name = r.text("scenario", "name").value_or("unnamed");

  const Expression A = r.expression("symbol", "A", "0.5");
  const Expression V = r.expression("symbol", "V", "0");
  std::vector<Jump> jumps;
  for (const auto& [section, body] : tree) {
    if (section.rfind("jump", 0) != 0) continue;
    if (!r.text(section, "nu")) r.fail(section, "nu", "missing");
    jumps.push_back(Jump{r.number(section, "nu", 0.0), r.expression(section, "rate", "1")});
  }
  bool time_dependent = A.uses(Variable::t) || V.uses(Variable::t);
  for (const auto& j : jumps) time_dependent = time_dependent || j.rate.uses(Variable::t);
  MomentumBox box;
  box.lo = r.number("symbol", "momentum_min", box.lo);
  box.hi = r.number("symbol", "momentum_max", box.hi);
  if (!(box.hi > box.lo)) r.fail("symbol", "momentum_max", "must exceed momentum_min");
  sc.symbol = SymbolModel(A, V, std::move(jumps), time_dependent, box);

  if (!r.text("initial", "S0")) r.fail("initial", "S0", "missing");
  sc.initial.S0 = r.expression("initial", "S0", "0");
  if (sc.initial.S0.uses(Variable::t)) r.fail("initial", "S0", "must not depend on t");
  if (r.text("initial", "dS0")) sc.initial.dS0 = r.expression("initial", "dS0", "0");
  if (r.text("initial", "d2S0")) sc.initial.d2S0 = r.expression("initial", "d2S0", "0");
  const bool has_rho = r.text("initial", "rho0").has_value();
  const bool has_phi = r.text("initial", "phi0").has_value();
  if (has_rho && has_phi) r.fail("initial", "phi0", "give rho0 or phi0, not both");
  if (has_phi) {
    const Expression phi = r.expression("initial", "phi0", "1");
    sc.rho0 = r.parse("initial", "phi0", "(" + phi.source() + ")^2", VariableSet::space_time());
  } else {
    sc.rho0 = r.expression("initial", "rho0", "1");
  }
  const std::string a = r.text("initial", "a").value_or("auto");
  if (a != "auto") sc.a_field = AField::from_expression(r.parse("initial", "a", a, VariableSet::space_velocity()));

  sc.x0_min = r.number("domain", "x0_min", sc.x0_min);
  sc.x0_max = r.number("domain", "x0_max", sc.x0_max);
  if (!(sc.x0_max > sc.x0_min)) r.fail("domain", "x0_max", "must exceed x0_min");
  sc.x0_points = static_cast<std::size_t>(r.integer("domain", "x0_points", static_cast<long>(sc.x0_points), 3));
  sc.T = r.number("domain", "T", sc.T);
  sc.h_t = r.number("domain", "h_t", sc.h_t);
  if (!(sc.T > 0.0)) r.fail("domain", "T", "must be positive");
  if (!(sc.h_t > 0.0)) r.fail("domain", "h_t", "must be positive");
  const double steps = sc.T / sc.h_t;
  if (std::fabs(steps - std::round(steps)) > 1e-12 * std::max(1.0, steps)) {
    r.fail("domain", "h_t", fmt::format("does not divide T = {}", sc.T));
  }
  sc.substeps = static_cast<int>(r.integer("domain", "substeps", sc.substeps, 1));
  sc.x_min = r.number("domain", "x_min", sc.x0_min);
  sc.x_max = r.number("domain", "x_max", sc.x0_max);
  if (!(sc.x_max > sc.x_min)) r.fail("domain", "x_max", "must exceed x_min");
  sc.x_points = static_cast<std::size_t>(r.integer("domain", "x_points", static_cast<long>(sc.x_points), 2));
  sc.snapshots = r.list("domain", "snapshots", {0.0, sc.T});
  for (double t : sc.snapshots) {
    if (t < 0.0 || t > sc.T * (1.0 + 1e-12)) r.fail("domain", "snapshots", fmt::format("{} outside [0, T]", t));
  }

  sc.tunnel_h = r.list("tunnel", "h", sc.tunnel_h);
  for (double h : sc.tunnel_h) {
    if (!(h > 0.0)) r.fail("tunnel", "h", "values must be positive");
  }
  sc.lattice_dx = r.number("tunnel", "dx", sc.lattice_dx);
  if (!(sc.lattice_dx > 0.0)) r.fail("tunnel", "dx", "must be positive");
  sc.lattice_x_min = r.number("tunnel", "x_min", sc.lattice_x_min);
  sc.lattice_x_max = r.number("tunnel", "x_max", sc.lattice_x_max);
  if (!(sc.lattice_x_max > sc.lattice_x_min)) r.fail("tunnel", "x_max", "must exceed x_min");
  sc.tunnel_t = r.number("tunnel", "t", std::min(1.0, sc.T));
  if (!(sc.tunnel_t > 0.0) || sc.tunnel_t > sc.T * (1.0 + 1e-12)) r.fail("tunnel", "t", "must lie in (0, T]");
  sc.tunnel_x_lo = r.number("tunnel", "x_lo", sc.tunnel_x_lo);
  sc.tunnel_x_hi = r.number("tunnel", "x_hi", sc.tunnel_x_hi);
  if (!(sc.tunnel_x_hi > sc.tunnel_x_lo)) r.fail("tunnel", "x_hi", "must exceed x_lo");

  sc.epsilons = r.list("regularization", "epsilon", sc.epsilons);
  for (std::size_t i = 0; i < sc.epsilons.size(); ++i) {
    if (!(sc.epsilons[i] > 0.0)) r.fail("regularization", "epsilon", "values must be positive");
    if (i > 0 && !(sc.epsilons[i] < sc.epsilons[i - 1])) r.fail("regularization", "epsilon", "must decrease");
  }
  const std::string profile = r.text("regularization", "profile").value_or("tanh");
  if (profile == "tanh") {
    sc.profile = BlendProfile::tanh;
  } else if (profile == "erf") {
    sc.profile = BlendProfile::erf;
  } else {
    r.fail("regularization", "profile", fmt::format("'{}' is not one of tanh, erf", profile));
  }
  sc.t1 = r.number("regularization", "t1", sc.t1);
  if (!(sc.t1 > 0.0)) r.fail("regularization", "t1", "must be positive");
  sc.C_target = r.number("regularization", "C_target", sc.C_target);
  if (!(sc.C_target > 0.0)) r.fail("regularization", "C_target", "must be positive");
  sc.limit_times = r.list("regularization", "times", {sc.T});
  for (double t : sc.limit_times) {
    if (!(t > 0.0) || t > sc.T * (1.0 + 1e-12)) r.fail("regularization", "times", fmt::format("{} outside (0, T]", t));
  }

  sc.bumps = static_cast<int>(r.integer("verify", "bumps", sc.bumps, 1));
  if (const auto seed = r.text("verify", "seed")) {
    try {
      std::size_t used = 0;
      sc.seed = std::stoull(*seed, &used);
      if (used != seed->size() || seed->front() == '-') throw std::invalid_argument(*seed);
    } catch (const std::exception&) {
      r.fail("verify", "seed", fmt::format("'{}' is not an unsigned integer", *seed));
    }
  }
  std::vector<int> levels;
  for (double l : r.list("verify", "levels", {5, 6, 7})) {
    if (l != std::floor(l) || l < 1 || l > 16) r.fail("verify", "levels", "levels are integers in [1, 16]");
    levels.push_back(static_cast<int>(l));
  }
  sc.levels = levels;

  sc.hopf_lax_grid = static_cast<std::size_t>(r.integer("oracle", "hopf_lax_grid", 2001, 11));
  sc.hopf_lax_momentum = r.number("oracle", "hopf_lax_momentum", sc.hopf_lax_momentum);
  if (!(sc.hopf_lax_momentum > 0.0)) r.fail("oracle", "hopf_lax_momentum", "must be positive");
  sc.godunov_cells = static_cast<std::size_t>(r.integer("oracle", "godunov_cells", 2000, 10));

  sc.out_dir = r.text("output", "dir").value_or(sc.out_dir);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open scenario file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

Scenario preset(const std::string& name) { return parse_scenario(preset_text(name), "preset:" + name); }

}  // namespace tunnelshock::cli

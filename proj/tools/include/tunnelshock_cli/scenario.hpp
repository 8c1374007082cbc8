#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/regularize.hpp"
#include "tunnelshock/symbol.hpp"

namespace tunnelshock::cli {

/// A scenario file: INI sections [scenario], [symbol], [jumpN], [initial],
/// [domain], [tunnel], [regularization], [verify], [oracle], [output].
/// Every expression is parsed at load time; errors name the key.
struct Scenario {
  std::string name;
  /// File path or "preset:<name>".
  std::string origin;

  SymbolModel symbol{Expression::constant(0.5), Expression::constant(0.0)};
  InitialAction initial;
  Expression rho0 = Expression::constant(1.0);
  AField a_field;

  double x0_min = -3.0;
  double x0_max = 3.0;
  std::size_t x0_points = 1201;
  double T = 1.0;
  double h_t = 0.01;
  int substeps = 1;
  /// Output grid of essential and density CSVs.
  double x_min = -3.0;
  double x_max = 3.0;
  std::size_t x_points = 601;
  /// Times of the slice CSVs (defaults to 0 and T).
  std::vector<double> snapshots;

  std::vector<double> tunnel_h{0.2, 0.1, 0.05};
  double lattice_dx = 0.005;
  double lattice_x_min = -6.0;
  double lattice_x_max = 6.0;
  double tunnel_t = 1.0;
  double tunnel_x_lo = -1.0;
  double tunnel_x_hi = 1.0;

  std::vector<double> epsilons{1e-2, 2.5e-3, 6.25e-4};
  BlendProfile profile = BlendProfile::tanh;
  double t1 = 0.3;
  double C_target = 1.0;
  /// Comparison times of the limit study (defaults to T).
  std::vector<double> limit_times;

  int bumps = 8;
  std::uint64_t seed = 1;
  std::vector<int> levels{5, 6, 7};

  std::size_t hopf_lax_grid = 2001;
  double hopf_lax_momentum = 5.0;
  std::size_t godunov_cells = 2000;

  std::string out_dir = "out";

  /// Key-value pairs as read ("section.key", value), in file order.
  std::vector<std::pair<std::string, std::string>> entries;

  FanOptions fan_options() const;
  std::vector<double> x0_grid() const;
  std::vector<double> x_grid() const;
};

/// Parses scenario text. `origin` is used in messages. Throws ValidationError.
Scenario parse_scenario(const std::string& text, const std::string& origin);

/// Reads a scenario file. Throws std::ios_base::failure when it cannot be opened.
Scenario load_scenario(const std::string& path);

/// Names of the built-in scenarios (the files of scenarios/ compiled in).
std::vector<std::string> preset_names();
const std::string& preset_text(const std::string& name);
Scenario preset(const std::string& name);

}  // namespace tunnelshock::cli

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/symbol.hpp"

namespace tunnelshock {

struct HopfLaxOptions {
  std::size_t grid = 2001;
  /// The y-search box is the image of dP/dp over [-momentum, momentum].
  double momentum = 5.0;
};

/// Brute-force min over y of S0(y) + t L((x - y) / t) for a spatially
/// homogeneous symbol. Every local minimum of the coarse grid is refined once
/// on a grid of the same size over +/- 2 cells. Throws ValidationError for
/// x-dependent symbols and Failure::range ("box too small") when the minimiser
/// sits on the search-box boundary.
double hopf_lax(const SymbolModel& symbol, const InitialAction& S0, double x, double t, const HopfLaxOptions& options = {});

struct GodunovOptions {
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t cells = 2000;
  double T = 1.0;
  double cfl = 0.4;
  /// Fixed time step; checked against the CFL bound. Chosen adaptively when empty.
  std::optional<double> dt;
  /// A drop v_i - v_{i+1} larger than this fraction of the total range marks a shock.
  double shock_threshold = 0.1;
};

struct GodunovResult {
  double t = 0.0;
  double dx = 0.0;
  std::size_t steps = 0;
  std::vector<double> x;  // cell centres
  std::vector<double> v;  // cell averages
  std::vector<double> shocks;

  /// Piecewise-constant value at x.
  double at(double x) const;
};

/// First-order Godunov scheme for v_t + P(v)_x = 0 with the exact Riemann flux
/// of a convex flux and transmissive boundaries.
GodunovResult godunov(const SymbolModel& symbol, const std::function<double(double)>& v0,
                      const GodunovOptions& options);

/// Exact Godunov flux of a convex flux between states vl and vr.
double godunov_flux(const SymbolModel& symbol, double vl, double vr, double t = 0.0);

/// Shock positions of a cell-average profile: groups of steep drops, each
/// located by the mass-conserving (equal area) position inside the group.
std::vector<double> locate_shocks(const std::vector<double>& x, const std::vector<double>& v, double threshold);

}  // namespace tunnelshock

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tunnelshock/density.hpp"
#include "tunnelshock/symbol.hpp"

namespace tunnelshock {

/// Nodal field of the Kolmogorov-Feller lattice solver.
struct LatticeField {
  std::vector<double> x;
  std::vector<double> values;
  double h = 0.0;
  double dx = 0.0;
  double t = 0.0;
  /// Time step used and its stability bound.
  double dt = 0.0;
  double dt_bound = 0.0;
  std::size_t steps = 0;
  /// Width (in nodes) of the frozen edge band.
  std::size_t reach = 1;

  double x_min() const { return x.front(); }
  double x_max() const { return x.back(); }
};

/// u0 = phi0(x) exp(-S0(x) / h) sampled on n nodes spanning [x_min, x_max].
LatticeField lattice_initial(const std::function<double(double)>& S0, const std::function<double(double)>& phi0,
                             double h, double x_min, double x_max, double dx);

struct LatticeOptions {
  double cfl = 0.4;
  /// Fixed step; checked against the bound. Defaults to cfl times the bound.
  std::optional<double> dt;
  /// |u| at the first interior node above this fraction of max |u| raises
  /// Failure::boundary_contact.
  double contact_tolerance = 1e-8;
};

/// Stability bound for u0 on the lattice (without the cfl factor):
/// min(dx^2 / (2 max A h), dx / max |dP/dp|, h / max sum lambda, h / max |V|).
/// Momenta for the advective bound come from p = -h (log u)_x on the initial data.
double lattice_stability_bound(const SymbolModel& symbol, const LatticeField& u0);

/// Explicit RK4 stepping of h u_t = A h^2 u_xx + V u + sum lambda_k (u(x - h nu_k) - u(x))
/// up to T. The jump shift is an exact grid shift, so h nu_k must be an
/// integer number of cells (ValidationError otherwise). Edge nodes keep their
/// initial values.
LatticeField kf_lattice(const SymbolModel& symbol, const LatticeField& u0, double T, const LatticeOptions& options = {});

struct TunnelCompareOptions {
  double t = 1.0;
  double x_lo = -1.0;
  double x_hi = 1.0;
  /// Collar around each shock: collar_cells lattice cells plus smear_widths times h.
  double collar_cells = 5.0;
  double smear_widths = 3.0;
};

struct TunnelRow {
  double h = 0.0;
  /// max |u e^{S/h} - sqrt(R)| over the comparison set.
  double error = 0.0;
  /// max |u e^{S/h} / sqrt(R) - 1|.
  double relative = 0.0;
  std::size_t points = 0;
};

struct TunnelTable {
  std::vector<TunnelRow> rows;
  /// Least-squares slope of log E against log h (NaN with fewer than two rows).
  double fitted_order = 0.0;
  double fitted_order_relative = 0.0;
};

/// Compares lattice fields at time t (one per h) with exp(-S/h) sqrt(R) on
/// the nodes in [x_lo, x_hi] covered by exactly one branch and away from shock
/// collars. Throws Failure::empty_comparison when no node qualifies.
TunnelTable tunnel_compare(const std::vector<LatticeField>& lattice, const GeneralizedDensity& gd,
                           const TunnelCompareOptions& options);

}  // namespace tunnelshock

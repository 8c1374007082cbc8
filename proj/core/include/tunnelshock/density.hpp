#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/expr.hpp"
#include "tunnelshock/manifold.hpp"

namespace tunnelshock {

struct DensityOptions {
  /// |J| below this on the essential set raises Failure::fold_contact.
  double fold_tolerance = 1e-12;
  /// Apply -f(c) e on shocks when the a-field is an expression f(x, u).
  bool stratum_term = true;
  /// RK4 substeps of the amplitude ODE per path interval (the first interval
  /// after a focal birth uses `first_substeps`).
  int substeps = 2;
  int first_substeps = 16;
  /// Multiplies e1 + e2 when seeding a merged shock. 1 is the Kirchhoff law;
  /// other values exist only for sensitivity runs.
  double kirchhoff_factor = 1.0;
};

/// x0 interval of the fan carried by one regular piece of the essential solution.
struct Piece {
  double x0_lo = 0.0;
  double x0_hi = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
};

struct DensityPoint {
  double x0 = 0.0;
  double x = 0.0;
  double p = 0.0;
  double S = 0.0;
  double J = 0.0;
  double R = 0.0;
  double u = 0.0;
  double a = 0.0;  // a(x, p) at the point
  std::size_t piece = 0;
};

class GeneralizedDensity;

/// Generalized density frozen at one time: regular pieces between shocks and
/// the shock states.
class DensitySlice {
 public:
  DensitySlice(const GeneralizedDensity& gd, double t);

  double t() const { return t_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<ShockSample>& shocks() const { return shocks_; }
  const std::vector<int>& shock_ids() const { return ids_; }

  /// Point of the regular part at x, or nothing at a shock position or outside the fan image.
  std::optional<DensityPoint> at(double x) const;
  /// Point on a fixed piece (one-sided values up to the piece ends).
  std::optional<DensityPoint> on_piece(std::size_t piece, double x) const;

  /// Integral of R over [x_lo, x_hi]: adaptive Simpson per piece in the
  /// variable x0, where R dx = rho0 exp(-a_int) dx0.
  double smooth_mass(double x_lo, double x_hi, double tol = 1e-11) const;
  double singular_mass() const;

 private:
  const GeneralizedDensity& gd_;
  double t_;
  LagrangianCurve curve_;
  std::vector<Piece> pieces_;
  std::vector<ShockSample> shocks_;
  std::vector<int> ids_;
};

/// rho = R + sum_i e_i delta(x - x_i(t)) built over a fan.
class GeneralizedDensity {
 public:
  GeneralizedDensity(std::shared_ptr<const Fan> fan, SymbolModel symbol, Expression rho0, AField a_field,
                     DensityOptions options = {});

  const Fan& fan() const { return *fan_; }
  std::shared_ptr<const Fan> fan_ptr() const { return fan_; }
  const SymbolModel& symbol() const { return *symbol_; }
  const Expression& rho0() const { return rho0_; }
  const AField& a_field() const { return a_field_; }
  const DensityOptions& options() const { return options_; }
  ShockSolver solver() const { return ShockSolver(*fan_, *symbol_); }

  const std::vector<ShockRecord>& shocks() const { return shocks_; }
  const std::vector<ShockEvent>& merges() const { return merges_; }
  std::vector<ShockRecord>& mutable_shocks() { return shocks_; }
  void set_shocks(std::vector<ShockRecord> shocks, std::vector<ShockEvent> merges);

  /// Cauchy formula rho0(x0) |J|^-1 exp(-a_int) on a trajectory state.
  double cauchy(double x0, double J, double a_int) const;
  /// R on fan row r at level k.
  double R_row(std::size_t row, std::size_t level) const;

  /// Shock state at any t in its lifetime with R and e filled.
  ShockSample shock_at(int id, double t) const;
  /// Right-hand side of the amplitude ODE at a shock state.
  double amplitude_rate(const ShockSample& s, double e) const;
  /// Amplitude by dense output of the stored path.
  double amplitude(int id, double t) const;
  /// Geometry of a shock at t (stored sample when t is a path time).
  ShockSample shock_geometry(const ShockRecord& rec, double t) const;

  /// Shocks alive at t sorted by position.
  std::vector<int> active(double t) const;

  DensitySlice slice(double t) const { return {*this, t}; }

  /// Initial mass over the fan's x0 range.
  double initial_mass(double tol = 1e-12) const;

 private:
  std::shared_ptr<const Fan> fan_;
  std::shared_ptr<const SymbolModel> symbol_;
  Expression rho0_;
  AField a_field_;
  DensityOptions options_;
  std::vector<ShockRecord> shocks_;
  std::vector<ShockEvent> merges_;
};

/// Smooth part only: the density before any shock is attached.
GeneralizedDensity transport_R(std::shared_ptr<const Fan> fan, const SymbolModel& symbol, const Expression& rho0,
                               const AField& a_field = {}, const DensityOptions& options = {});

/// Integrates the amplitude ODE de/dt = R_l (u_l - c) - R_r (u_r - c) - f(c) e along
/// the recorded path (in s = sqrt(t - t_birth) after a focal birth) and fills
/// R_l, R_r, e and de/dt on every sample. The initial value is 0 for focal
/// births and the sample's stored e for merged shocks.
void evolve_amplitude(const GeneralizedDensity& gd, ShockRecord& shock);

/// Cubic Hermite dense output of e along a path with evolved amplitudes.
double amplitude_dense(const ShockRecord& shock, double t);

/// Shock born where s1 and s2 meet, seeded with e3 = e1 + e2 (times the
/// configured factor).
ShockRecord merge(const GeneralizedDensity& gd, const ShockRecord& s1, const ShockRecord& s2, double t_merge, int id);

/// Tracks all shocks of the fan and evolves their amplitudes in birth order.
GeneralizedDensity build_density(std::shared_ptr<const Fan> fan, const SymbolModel& symbol, const Expression& rho0,
                                 const AField& a_field = {}, const DensityOptions& options = {},
                                 const TrackOptions& track = {});

struct MassRecord {
  double t = 0.0;
  double smooth = 0.0;
  double singular = 0.0;
  double total() const { return smooth + singular; }
};

MassRecord masses(const GeneralizedDensity& gd, double t);

struct MadelungField {
  double t = 0.0;
  double h = 0.0;
  std::vector<double> x;
  std::vector<double> value;
  std::vector<bool> masked;
};

/// exp(-S/h) sqrt(R) on the essential solution's points; points within
/// `collar` of a shock, or uncovered, are masked.
MadelungField madelung_assemble(const EssentialSolution& S, const GeneralizedDensity& gd, double h, double collar = 0.0);

}  // namespace tunnelshock

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "tunnelshock/characteristics.hpp"

namespace tunnelshock {

struct CurveSample {
  double x0 = 0.0;
  double x = 0.0;
  double p = 0.0;
  double S = 0.0;
  double J = 1.0;
  double dp = 0.0;
  double a_int = 0.0;
};

/// Maximal x0 interval on which J keeps one sign. Ends at folds are placed
/// where the linear interpolant of J vanishes; ends at the fan edge or at an
/// invalid row sit on a sample.
struct Branch {
  std::size_t first = 0;  // first sample strictly inside
  std::size_t last = 0;   // last sample strictly inside
  int sign = 1;           // sign of J
  double x0_lo = 0.0;
  double x0_hi = 0.0;
  double x_lo = 0.0;  // min of x over the branch
  double x_hi = 0.0;  // max of x over the branch
};

/// Time slice of a fan: samples ordered by x0 with branch decomposition.
/// Values between samples use cubic Hermite interpolation in x0 with the
/// exact derivatives dx/dx0 = J, dp/dx0 = dp and dS/dx0 = p J; J and a_int use
/// four-point Lagrange interpolation.
class LagrangianCurve {
 public:
  LagrangianCurve(double t, std::vector<CurveSample> samples);

  double t() const { return t_; }
  const std::vector<CurveSample>& samples() const { return samples_; }
  const std::vector<Branch>& branches() const { return branches_; }

  /// Interpolated state at x0 inside the sampled range.
  CurveSample at_x0(double x0) const;

  /// Preimage of x on branch b, or nothing if b does not cover x.
  std::optional<CurveSample> invert(std::size_t b, double x) const;

  /// Preimage of x with x0 restricted to [x0_lo, x0_hi], on which x(x0) must
  /// be increasing. Nothing if x is outside the image of the window.
  std::optional<CurveSample> invert_window(double x, double x0_lo, double x0_hi) const;

  /// Index of the sample interval containing x0.
  std::size_t segment(double x0) const;

 private:
  std::optional<CurveSample> invert_range(double x, double lo, double hi, int sign) const;

  double t_;
  std::vector<CurveSample> samples_;
  std::vector<Branch> branches_;
};

/// Slice at a grid time. Throws Failure::off_grid for other times.
LagrangianCurve slice(const Fan& fan, double t);

/// Slice at any time in [0, T], advancing rows from the preceding level.
/// Only rows with x0 in [x0_lo, x0_hi] (plus two neighbours each side) are used.
LagrangianCurve slice_at(const Fan& fan, double t, double x0_lo = -std::numeric_limits<double>::infinity(),
                         double x0_hi = std::numeric_limits<double>::infinity());

struct EssentialSolution {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> S;
  std::vector<double> u;
  std::vector<double> p;
  std::vector<double> x0;
  /// Branch attaining the minimum, -1 where x is not covered.
  std::vector<int> branch_id;

  bool all_covered() const;
};

/// Pointwise minimum of the branch actions. Ties within 1e-12 (relative) go to
/// the branch with smaller |p|, then smaller index. Uncovered points get
/// branch_id = -1 and NaN values.
EssentialSolution essential(const LagrangianCurve& curve, const SymbolModel& symbol, const std::vector<double>& x_grid);

struct Singularity {
  double t = 0.0;   // time of the first J = 0 on the row family
  double x = 0.0;   // projection of the focal point
  double x0 = 0.0;  // initial point of the focusing characteristic
  /// Cusp scale: preimages of the shock behave like x0 -/+ k sqrt(t - t*).
  double k = 0.0;
};

/// Earliest J = 0 over the fan. Throws Failure::no_singularity if J > 0 throughout.
Singularity first_singularity(const Fan& fan);

/// Every local minimum of the first-zero time t0(x0) within [0, T], sorted by time.
std::vector<Singularity> singularities(const Fan& fan);

/// Time of the first zero of J on the trajectory from x0, +inf if none by T.
double first_zero_time(const Fan& fan, double x0);

/// Equal-action state: two trajectories from x0_l < x0_r meeting at x with the same action.
struct ShockState {
  double t = 0.0;
  double x = 0.0;
  double c = 0.0;  // [P]/[p]
  double u_l = 0.0;
  double u_r = 0.0;
  TrajectoryPoint left;
  TrajectoryPoint right;
  double x0_l = 0.0;
  double x0_r = 0.0;
};

/// Newton solver for x(x0_l, t) = x(x0_r, t), S(x0_l, t) = S(x0_r, t) on
/// freshly integrated trajectories.
class ShockSolver {
 public:
  ShockSolver(const Fan& fan, const SymbolModel& symbol);

  std::optional<ShockState> solve(double t, double x0_l, double x0_r) const;
  ShockState state(double t, double x0_l, double x0_r) const;

  const Fan& fan() const { return fan_; }
  const SymbolModel& symbol() const { return symbol_; }

 private:
  const Fan& fan_;
  const SymbolModel& symbol_;
};

/// Rankine-Hugoniot quotient (P(x, p_l) - P(x, p_r)) / (p_l - p_r). When
/// |p_l - p_r| <= 1e-12 returns dP/dp at the mean momentum.
double rankine_hugoniot(const SymbolModel& symbol, double x, double p_l, double p_r, double t = 0.0);

struct ShockSample {
  double t = 0.0;
  double x = 0.0;
  double c = 0.0;
  double p_l = 0.0;
  double p_r = 0.0;
  double u_l = 0.0;
  double u_r = 0.0;
  double R_l = 0.0;
  double R_r = 0.0;
  double e = 0.0;
  double de = 0.0;  // de/dt
  double x0_l = 0.0;
  double x0_r = 0.0;
  double J_l = 0.0;
  double J_r = 0.0;
  double a_l = 0.0;
  double a_r = 0.0;
  double S = 0.0;
};

/// Geometric fields of a sample from a solved state (R, e left at 0).
ShockSample make_sample(const ShockState& state);

enum class ShockStatus { active, merged, exhausted };

struct ShockRecord {
  int id = 0;
  double t_birth = 0.0;
  double x_birth = 0.0;
  double x0_birth = 0.0;
  /// Cusp scale for shocks born at a focal point; 0 for shocks born in a merge.
  double k_birth = 0.0;
  /// de/ds at s = sqrt(t - t_birth) = 0 for focal births (set by the density module).
  double birth_slope = 0.0;
  std::vector<int> parents;
  ShockStatus status = ShockStatus::active;
  int merged_into = -1;
  double t_end = 0.0;
  std::vector<ShockSample> path;

  bool from_merge() const { return !parents.empty(); }
  /// Anchor guess at t by interpolation of the path (in sqrt(t - t_birth)
  /// for focal births).
  std::pair<double, double> anchors_guess(double t) const;
};

struct ShockEvent {
  double t = 0.0;
  double x = 0.0;
  std::vector<int> parents;
  int child = -1;
};

struct ShockSystem {
  std::vector<ShockRecord> shocks;
  std::vector<ShockEvent> merges;

  /// Ids of shocks alive at t (born at or before t, not yet merged).
  std::vector<int> active_at(double t) const;
};

struct TrackOptions {
  /// Samples within this time after birth skip the Lax check.
  double lax_skip = 1e-9;
  double lax_tolerance = 1e-10;
};

/// Tracks one shock born at a focal point over the grid times of the fan.
ShockRecord track_shock(const Fan& fan, const SymbolModel& symbol, const Singularity& seed,
                        const TrackOptions& options = {});

/// Tracks every shock of the fan, detecting merges (which spawn a new shock
/// whose anchors are the outer anchors of its parents). Geometry only: R and
/// e are filled by the density module.
ShockSystem track_shocks(const Fan& fan, const SymbolModel& symbol, const TrackOptions& options = {});

}  // namespace tunnelshock

#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/density.hpp"
#include "tunnelshock/manifold.hpp"

namespace tunnelshock {

enum class BlendProfile { tanh, erf };

/// B(z), increasing from 0 to 1. tanh: (1 + tanh z) / 2; erf: (1 + erf z) / 2.
double blend(BlendProfile profile, double z);
double blend_slope(BlendProfile profile, double z);
/// Samples the profile on [-20, 20] and throws ValidationError unless it is
/// monotone with limits 0 and 1.
void check_profile(BlendProfile profile);

struct RegularizationParams {
  double epsilon = 1e-2;
  double beta = 0.1;
  /// Shift of the blending argument, B((t - t_i) / epsilon + A). Tuned when empty.
  std::optional<double> A_shift;
  BlendProfile profile = BlendProfile::tanh;
  /// Pull-back time of the surgery.
  double t1 = 0.3;
  /// Tuning target: min J on the insertion after the onset >= 0.5 C epsilon.
  double C_target = 1.0;

  /// epsilon > 0, beta > 0, epsilon <= beta^2, t1 > 0, C_target > 0.
  void validate() const;
};

/// Linear-velocity replacement of the initial data on (x0* - beta, x0* + beta):
/// dP/dp(u1) = -K x0 + b, matching u0 at both ends. All insertion trajectories
/// meet at t = 1 / K.
struct Insertion {
  double x0_star = 0.0;
  double beta = 0.0;
  double K = 0.0;
  double b = 0.0;
  double v_l = 0.0;
  double v_r = 0.0;
  double p_l = 0.0;
  double p_r = 0.0;

  double onset() const { return 1.0 / K; }
  bool contains(double x0) const { return x0 > x0_star - beta && x0 < x0_star + beta; }
  double velocity(double x0) const { return -K * x0 + b; }
  /// u1(x0) by inverting dP/dp; Failure::no_root outside the momentum box.
  double momentum(const SymbolModel& symbol, double x0) const;
};

/// Requires a homogeneous, time-independent symbol and K > 0 (focusing data).
Insertion build_insertion(const SymbolModel& symbol, const InitialAction& S0, double x0_star, double beta);

struct PlateauSpeed {
  double c = 0.0;
  /// |p_r - p_l| <= 1e-12: c is the one-sided dP/dp instead of the quotient.
  bool degenerate = false;
};

/// (P(x_r, p_r) - P(x_l, p_l)) / (p_r - p_l).
PlateauSpeed plateau_speed(const SymbolModel& symbol, double x_l, double p_l, double x_r, double p_r, double t = 0.0);

/// Path of the plateau from the insertion onset: X' = c with c from the
/// states of the plain characteristics meeting X from either side.
struct PlateauPath {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> c;
  std::vector<double> x0_l;
  std::vector<double> x0_r;

  double start() const { return t.front(); }
  /// Cubic Hermite in t; constant extension before the onset and after the end.
  double position(double t) const;
  double speed(double t) const;
};

PlateauPath plateau_path(const SymbolModel& symbol, const InitialAction& S0, const Insertion& ins, double T,
                         double x0_lo, double x0_hi, std::size_t steps = 4000);

/// Blended characteristics of a homogeneous symbol:
///   x' = (1 - B_i) v + B_i c(t),  B_i = B((t - t_i) / epsilon + A),
/// where t_i is the onset of the insertion for x0 inside it and the time the
/// plain trajectory reaches the plateau otherwise (+inf when it never does).
///   J' = (1 - B_i) dv/dx0 + B_i' / epsilon * t_i' (v - c),  t_i' = -J_plain(t_i) / (v - c(t_i)).
class BlendedFlow : public Flow {
 public:
  struct Row {
    bool inserted = false;
    double p = 0.0;
    double dp = 0.0;
    double v = 0.0;
    double dv = 0.0;
    double t_i = 0.0;
    double dt_i = 0.0;
  };

  BlendedFlow(SymbolModel symbol, InitialAction S0, std::optional<Insertion> ins, std::optional<PlateauPath> path,
              BlendProfile profile, double epsilon, double A, double T, const std::vector<double>& x0_grid = {});

  void rhs(double x0, const TrajectoryPoint& y, TrajectoryPoint& dy) const override;
  /// Steps of at most epsilon / 16 while the row's blend is active.
  int substeps(double x0, double t_a, double t_b, int base) const override;

  Row row(double x0) const;
  TrajectoryPoint initial(double x0) const;
  /// B_i(t) for the row from x0.
  double blend_at(double x0, double t) const;
  /// Blended mass: integral of rho0(x0) B_i(t) over [x0_lo, x0_hi].
  double absorbed_mass(const Expression& rho0, double t, double x0_lo, double x0_hi, double tol = 1e-11) const;

  const std::optional<Insertion>& insertion() const { return ins_; }
  const std::optional<PlateauPath>& path() const { return path_; }
  double epsilon() const { return epsilon_; }
  double A() const { return A_; }

 private:
  Row compute_row(double x0) const;
  double onset_time(double x0, double v) const;

  SymbolModel symbol_;
  InitialAction S0_;
  std::optional<Insertion> ins_;
  std::optional<PlateauPath> path_;
  BlendProfile profile_;
  double epsilon_;
  double A_;
  double T_;
  std::unordered_map<double, Row> cache_;
};

/// Smallest A in [0, 100] (bisection) with min J >= 0.5 C epsilon on the
/// insertion over [onset, T]. Failure::tuning when A = 100 is not enough.
double tune_shift(const Insertion& ins, BlendProfile profile, double epsilon, double C_target, double T);

/// Minimum over [onset, T] of the insertion Jacobian (the same for every insertion row).
double insertion_min_jacobian(const Insertion& ins, BlendProfile profile, double epsilon, double A, double T);

struct RegularizedFan {
  std::shared_ptr<const Fan> fan;
  std::shared_ptr<const BlendedFlow> flow;
  std::optional<Insertion> insertion;
  double A = 0.0;
  double min_J_insertion = 0.0;
};

/// Blended fan over x0_grid. Without a singularity in the plain fan the
/// result equals the plain fan. Each row steps at most epsilon / 16 while its
/// blend is active.
RegularizedFan blended_fan(const SymbolModel& symbol, const InitialAction& S0, const std::vector<double>& x0_grid,
                           const RegularizationParams& params, const FanOptions& options,
                           std::optional<double> x0_star = std::nullopt);

struct LimitStudyOptions {
  std::vector<double> epsilons{1e-2, 2.5e-3, 6.25e-4};
  /// Times at which R_eps and e_eps are compared.
  std::vector<double> times{1.0};
  BlendProfile profile = BlendProfile::tanh;
  double C_target = 1.0;
  /// Collar half-width around the shock: collar_factor * epsilon * log(1 / epsilon).
  double collar_factor = 1.0;
  /// x0 grid of the blended fans (defaults to the reference fan's grid).
  std::vector<double> x0_grid;
  unsigned threads = 0;
};

struct LimitRow {
  double epsilon = 0.0;
  double beta = 0.0;
  double A = 0.0;
  double collar = 0.0;
  double sup_R_error = 0.0;
  double e_error = 0.0;
  double min_J_over_eps = 0.0;
  std::size_t compared = 0;
};

struct LimitReport {
  std::vector<LimitRow> rows;
  bool R_decreasing = true;
  bool e_decreasing = true;
};

/// Regularized runs with beta = sqrt(epsilon) compared against the density
/// module: sup |rho0 / J_eps - R| over blended rows outside the collar and
/// |e_eps - e| at the sample times.
LimitReport limit_study(const GeneralizedDensity& reference, const InitialAction& S0, const LimitStudyOptions& options);

/// Inhomogeneous construction: the curve at t* + beta with its essential
/// branches joined by a vertical segment, pulled back by t1.
struct SurgeryCurve {
  /// Time of the pulled-back curve (t* + beta - t1) and of the vertical segment.
  double t_start = 0.0;
  double t_vertical = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  /// Parameter interval of the segment: sigma in [sigma_1, sigma_2].
  double sigma_1 = 0.0;
  double sigma_2 = 0.0;
  /// Samples ordered by the curve parameter (stored in x0) with tangents J = dx/dsigma, dp = dp/dsigma.
  std::vector<CurveSample> samples;
  /// The same curve before the pull-back.
  std::vector<CurveSample> vertical;

  LagrangianCurve curve() const { return {t_start, samples}; }
};

/// Requires a time-independent symbol. Failure::regularity when the
/// pulled-back curve is not a graph over x (t1 too large).
SurgeryCurve surgery(const SymbolModel& symbol, const Fan& fan, double t_star, double beta, double t1,
                     std::size_t segment_points = 201);

/// Plain Hamiltonian fan started from the pulled-back curve; fan time 0 is
/// t_start and the fan ends at t_vertical (the options' T is overridden).
Fan surgery_fan(const SymbolModel& symbol, const SurgeryCurve& curve, FanOptions options);

}  // namespace tunnelshock

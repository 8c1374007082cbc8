#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "tunnelshock/expr.hpp"
#include "tunnelshock/symbol.hpp"

namespace tunnelshock {

/// State carried along one characteristic. `J` is dx/dx0 and `dp` is dp/dx0
/// (the variational pair); `a_int` accumulates the integral of a(x, p, t).
struct TrajectoryPoint {
  double t = 0.0;
  double x = 0.0;
  double p = 0.0;
  double S = 0.0;
  double J = 1.0;
  double dp = 0.0;
  double a_int = 0.0;
};

/// S0 with optional closed-form first and second derivatives. Missing
/// derivatives are taken by central differences (steps 1e-5 and 1e-4).
struct InitialAction {
  Expression S0;
  std::optional<Expression> dS0;
  std::optional<Expression> d2S0;

  double action(double x0) const;
  double momentum(double x0) const;
  double curvature(double x0) const;
  TrajectoryPoint point(double x0) const;
};

/// Coefficient a of the continuity equation. Automatic mode uses
/// a = -d2P/dxdp(x, p); otherwise a = f(x, u) with u = dP/dp(x, p).
struct AField {
  bool automatic = true;
  Expression f;

  double operator()(const SymbolDerivatives& d, double x, double t) const;
  static AField from_expression(Expression f) { return AField{false, std::move(f)}; }
};

/// Right-hand side of an ODE for TrajectoryPoint. Rows are identified by x0 so
/// that blended flows can depend on the initial point.
class Flow {
 public:
  virtual ~Flow() = default;

  /// Writes the time derivative of y into dy (dy.t is ignored).
  virtual void rhs(double x0, const TrajectoryPoint& y, TrajectoryPoint& dy) const = 0;

  /// One classical RK4 step of size h.
  TrajectoryPoint step(double x0, const TrajectoryPoint& y, double h) const;

  /// Integrates from y.t to t_end with equal RK4 steps no longer than max_step.
  TrajectoryPoint advance(double x0, TrajectoryPoint y, double t_end, double max_step) const;
  /// RK4 steps for the row from x0 over one output interval [t_a, t_b]; `base`
  /// is the fan's setting. Flows with localized fast time scales refine here.
  virtual int substeps(double x0, double t_a, double t_b, int base) const;
};

/// x' = P_p, p' = -P_x, S' = p P_p - P, J' = P_xp J + P_pp dp,
/// dp' = -P_xx J - P_xp dp, a_int' = a.
class HamiltonianFlow : public Flow {
 public:
  HamiltonianFlow(SymbolModel symbol, AField a_field = {});

  void rhs(double x0, const TrajectoryPoint& y, TrajectoryPoint& dy) const override;

  const SymbolModel& symbol() const { return symbol_; }
  const AField& a_field() const { return a_field_; }

 private:
  SymbolModel symbol_;
  AField a_field_;
};

struct FanOptions {
  double T = 1.0;
  double h_t = 0.01;
  /// RK4 steps per output step.
  int substeps = 1;
  /// Step-doubling monitor; a step whose estimated local error exceeds
  /// `tolerance` raises Failure::step_rejected. The stored state is always the
  /// single full step, so monitored and unmonitored runs agree bit for bit.
  bool monitor = true;
  double tolerance = 1e-8;
  /// Trajectories leaving |x| <= escape_box are truncated.
  double escape_box = 1e3;
  unsigned threads = 0;
};

/// Family of trajectories sharing one uniform time grid t_k = k h_t.
class Fan {
 public:
  Fan(std::shared_ptr<const Flow> flow, std::function<TrajectoryPoint(double)> initial, std::vector<double> x0_grid,
      double h_t, std::size_t steps, int substeps, std::vector<TrajectoryPoint> data,
      std::vector<std::size_t> valid_steps);

  std::size_t rows() const { return x0_.size(); }
  /// Number of time levels (steps + 1).
  std::size_t levels() const { return levels_; }
  double h_t() const { return h_t_; }
  double T() const { return h_t_ * static_cast<double>(levels_ - 1); }
  double time(std::size_t k) const { return h_t_ * static_cast<double>(k); }
  const std::vector<double>& x0_grid() const { return x0_; }
  double x0(std::size_t row) const { return x0_[row]; }

  const TrajectoryPoint& at(std::size_t row, std::size_t k) const { return data_[row * levels_ + k]; }
  /// Whether the row is still inside the working box at level k.
  bool valid(std::size_t row, std::size_t k) const { return k < valid_[row]; }

  /// Level index of a grid time. Throws Failure::off_grid otherwise.
  std::size_t level_of(double t) const;

  /// State of a row at any t in [0, T], advanced from the preceding level.
  TrajectoryPoint state_at(std::size_t row, double t) const;

  /// State at time t of the trajectory starting at any x0 (not only grid
  /// rows), using the same step sequence as the rows.
  TrajectoryPoint trajectory(double x0, double t) const;
  TrajectoryPoint initial(double x0) const { return initial_(x0); }

  const Flow& flow() const { return *flow_; }
  std::shared_ptr<const Flow> flow_ptr() const { return flow_; }
  int substeps() const { return substeps_; }

 private:
  std::shared_ptr<const Flow> flow_;
  std::function<TrajectoryPoint(double)> initial_;
  std::vector<double> x0_;
  double h_t_;
  std::size_t levels_;
  int substeps_;
  std::vector<TrajectoryPoint> data_;
  std::vector<std::size_t> valid_;
};

/// Integrates a fan of an arbitrary flow from given initial points.
Fan integrate_fan(std::shared_ptr<const Flow> flow, std::vector<double> x0_grid,
                  std::function<TrajectoryPoint(double)> initial, const FanOptions& options);

/// Hamiltonian fan from S0.
Fan integrate_fan(const SymbolModel& symbol, const InitialAction& S0, std::vector<double> x0_grid,
                  const FanOptions& options, const AField& a_field = {});

/// Uniform grid of n points on [a, b].
std::vector<double> uniform_grid(double a, double b, std::size_t n);

struct JacobianReport {
  double max_deviation = 0.0;
  std::size_t row = 0;
  double t = 0.0;
};

/// Compares the variational J with finite differences of x over the seven
/// nearest rows (Fornberg weights, one-sided near the edges). The deviation
/// is |J - J_fd| / max(|J|, 1). Checks level k, or every level when k is
/// empty. Throws ValidationError("fan too small") below 3 rows.
JacobianReport jacobian_check(const Fan& fan, std::optional<std::size_t> level = std::nullopt);

}  // namespace tunnelshock

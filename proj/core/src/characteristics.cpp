#include "tunnelshock/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/numerics.hpp"
#include "tunnelshock/parallel.hpp"

namespace tunnelshock {

namespace {

TrajectoryPoint axpy(const TrajectoryPoint& y, double h, const TrajectoryPoint& k) {
  TrajectoryPoint r;
  r.t = y.t + h;
  r.x = y.x + h * k.x;
  r.p = y.p + h * k.p;
  r.S = y.S + h * k.S;
  r.J = y.J + h * k.J;
  r.dp = y.dp + h * k.dp;
  r.a_int = y.a_int + h * k.a_int;
  return r;
}

double scaled_difference(const TrajectoryPoint& a, const TrajectoryPoint& b) {
  auto d = [](double u, double v) { return std::fabs(u - v) / (1.0 + std::fabs(v)); };
  return std::max({d(a.x, b.x), d(a.p, b.p), d(a.S, b.S), d(a.J, b.J), d(a.dp, b.dp), d(a.a_int, b.a_int)});
}

TrajectoryPoint nan_point(double t) {
  const double n = std::numeric_limits<double>::quiet_NaN();
  return {t, n, n, n, n, n, n};
}

}  // namespace

double InitialAction::action(double x0) const { return S0(x0); }

double InitialAction::momentum(double x0) const {
  if (dS0) return (*dS0)(x0);
  return derivative_x(S0, x0, 0.0, 1e-5);
}

double InitialAction::curvature(double x0) const {
  if (d2S0) return (*d2S0)(x0);
  if (dS0) return derivative_x(*dS0, x0, 0.0, 1e-5);
  return second_derivative_x(S0, x0, 0.0, 1e-4);
}

TrajectoryPoint InitialAction::point(double x0) const {
  return {0.0, x0, momentum(x0), action(x0), 1.0, curvature(x0), 0.0};
}

double AField::operator()(const SymbolDerivatives& d, double x, double t) const {
  if (automatic) return -d.Pxp;
  return f.eval(Bindings{x, t, d.Pp});
}

TrajectoryPoint Flow::step(double x0, const TrajectoryPoint& y, double h) const {
  TrajectoryPoint k1, k2, k3, k4;
  rhs(x0, y, k1);
  rhs(x0, axpy(y, 0.5 * h, k1), k2);
  rhs(x0, axpy(y, 0.5 * h, k2), k3);
  rhs(x0, axpy(y, h, k3), k4);
  TrajectoryPoint r;
  r.t = y.t + h;
  const double w = h / 6.0;
  r.x = y.x + w * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  r.p = y.p + w * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
  r.S = y.S + w * (k1.S + 2 * k2.S + 2 * k3.S + k4.S);
  r.J = y.J + w * (k1.J + 2 * k2.J + 2 * k3.J + k4.J);
  r.dp = y.dp + w * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
  r.a_int = y.a_int + w * (k1.a_int + 2 * k2.a_int + 2 * k3.a_int + k4.a_int);
  return r;
}

TrajectoryPoint Flow::advance(double x0, TrajectoryPoint y, double t_end, double max_step) const {
  const double span = t_end - y.t;
  if (span == 0.0) return y;
  const int n = std::max(1, static_cast<int>(std::ceil(std::fabs(span) / max_step - 1e-9)));
  const double h = span / n;
  const double t0 = y.t;
  for (int i = 0; i < n; ++i) {
    y = step(x0, y, h);
    y.t = t0 + span * (i + 1) / n;
  }
  return y;
}

int Flow::substeps(double, double, double, int base) const { return base; }

HamiltonianFlow::HamiltonianFlow(SymbolModel symbol, AField a_field)
    : symbol_(std::move(symbol)), a_field_(std::move(a_field)) {}

void HamiltonianFlow::rhs(double, const TrajectoryPoint& y, TrajectoryPoint& dy) const {
  const auto d = symbol_.derivatives(y.x, y.p, y.t);
  dy.x = d.Pp;
  dy.p = -d.Px;
  dy.S = y.p * d.Pp - d.P;
  dy.J = d.Pxp * y.J + d.Ppp * y.dp;
  dy.dp = -d.Pxx * y.J - d.Pxp * y.dp;
  dy.a_int = a_field_(d, y.x, y.t);
}

Fan::Fan(std::shared_ptr<const Flow> flow, std::function<TrajectoryPoint(double)> initial,
         std::vector<double> x0_grid, double h_t, std::size_t steps, int substeps, std::vector<TrajectoryPoint> data,
         std::vector<std::size_t> valid_steps)
    : flow_(std::move(flow)),
      initial_(std::move(initial)),
      x0_(std::move(x0_grid)),
      h_t_(h_t),
      levels_(steps + 1),
      substeps_(substeps),
      data_(std::move(data)),
      valid_(std::move(valid_steps)) {}

std::size_t Fan::level_of(double t) const {
  const double k = std::round(t / h_t_);
  if (k < 0 || k >= static_cast<double>(levels_) || std::fabs(t - k * h_t_) > 1e-9 * std::max(1.0, std::fabs(t))) {
    throw NumericalError(Failure::off_grid, fmt::format("t = {} is not on the fan time grid (step {})", t, h_t_));
  }
  return static_cast<std::size_t>(k);
}

TrajectoryPoint Fan::state_at(std::size_t row, double t) const {
  if (t < -1e-12 || t > T() * (1 + 1e-12) + 1e-12) {
    throw NumericalError(Failure::off_grid, fmt::format("t = {} outside [0, {}]", t, T()));
  }
  auto k = static_cast<std::size_t>(std::floor(t / h_t_ + 1e-12));
  k = std::min(k, levels_ - 1);
  if (std::fabs(t - time(k)) <= 1e-13 * std::max(1.0, t)) return at(row, k);
  if (!valid(row, k)) return nan_point(t);
  const int n = flow_->substeps(x0_[row], time(k), time(k) + h_t_, substeps_);
  return flow_->advance(x0_[row], at(row, k), t, h_t_ / n);
}

TrajectoryPoint Fan::trajectory(double x0, double t) const {
  TrajectoryPoint y = initial_(x0);
  y.t = 0.0;
  auto k = static_cast<std::size_t>(std::floor(t / h_t_ + 1e-12));
  k = std::min(k, levels_ - 1);
  for (std::size_t level = 1; level <= k; ++level) {
    const int n = flow_->substeps(x0, time(level - 1), time(level), substeps_);
    const double h = h_t_ / n;
    for (int s = 0; s < n; ++s) y = flow_->step(x0, y, h);
    y.t = time(level);
  }
  if (std::fabs(t - time(k)) <= 1e-13 * std::max(1.0, t)) return y;
  return flow_->advance(x0, y, t, h_t_ / flow_->substeps(x0, time(k), time(k) + h_t_, substeps_));
}

Fan integrate_fan(std::shared_ptr<const Flow> flow, std::vector<double> x0_grid,
                  std::function<TrajectoryPoint(double)> initial, const FanOptions& options) {
  if (!(options.h_t > 0.0)) throw ValidationError("time step h_t must be positive");
  if (!(options.T >= 0.0)) throw ValidationError("final time T must be non-negative");
  if (x0_grid.empty()) throw ValidationError("x0 grid is empty");
  for (std::size_t i = 1; i < x0_grid.size(); ++i) {
    if (!(x0_grid[i] > x0_grid[i - 1])) throw ValidationError("x0 grid must be strictly increasing");
  }
  const double ratio = options.T / options.h_t;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::fabs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError(fmt::format("h_t = {} does not divide T = {}", options.h_t, options.T));
  }
  const int sub = std::max(1, options.substeps);
  const std::size_t levels = steps + 1;
  const std::size_t rows = x0_grid.size();
  std::vector<TrajectoryPoint> data(rows * levels);
  std::vector<std::size_t> valid(rows, levels);

  parallel_for(
      rows,
      [&](std::size_t r) {
        const double x0 = x0_grid[r];
        TrajectoryPoint y = initial(x0);
        y.t = 0.0;
        data[r * levels] = y;
        for (std::size_t k = 1; k < levels; ++k) {
          if (valid[r] < levels) {
            data[r * levels + k] = nan_point(options.h_t * k);
            continue;
          }
          const int n = flow->substeps(x0, options.h_t * (k - 1), options.h_t * k, sub);
          const double h = options.h_t / n;
          for (int s = 0; s < n; ++s) {
            TrajectoryPoint full = flow->step(x0, y, h);
            if (options.monitor) {
              const TrajectoryPoint half = flow->step(x0, flow->step(x0, y, 0.5 * h), 0.5 * h);
              const double err = scaled_difference(full, half) / 15.0;
              if (!(err <= options.tolerance)) {
                throw NumericalError(Failure::step_rejected,
                                     fmt::format("local error {:.3g} exceeds {:.3g} at x0 = {}, t = {}", err,
                                                 options.tolerance, x0, y.t + h));
              }
            }
            y = full;
          }
          y.t = options.h_t * k;
          if (!(std::fabs(y.x) <= options.escape_box)) {
            valid[r] = k;
            data[r * levels + k] = nan_point(y.t);
            continue;
          }
          data[r * levels + k] = y;
        }
      },
      options.threads);

  return Fan(std::move(flow), std::move(initial), std::move(x0_grid), options.h_t, steps, sub, std::move(data),
             std::move(valid));
}

Fan integrate_fan(const SymbolModel& symbol, const InitialAction& S0, std::vector<double> x0_grid,
                  const FanOptions& options, const AField& a_field) {
  auto flow = std::make_shared<HamiltonianFlow>(symbol, a_field);
  return integrate_fan(std::move(flow), std::move(x0_grid), [S0](double x0) { return S0.point(x0); }, options);
}

std::vector<double> uniform_grid(double a, double b, std::size_t n) {
  if (n < 2) return {a};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

JacobianReport jacobian_check(const Fan& fan, std::optional<std::size_t> level) {
  const std::size_t n = fan.rows();
  if (n < 3) throw ValidationError("fan too small");
  const auto& x0 = fan.x0_grid();
  const std::size_t width = std::min<std::size_t>(7, n);
  // Stencil of the `width` rows nearest to each row; weights depend only on the grid.
  std::vector<std::size_t> first(n);
  std::vector<std::vector<double>> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = std::min(i >= width / 2 ? i - width / 2 : 0, n - width);
    first[i] = lo;
    weights[i] = numerics::derivative_weights(x0[i], std::span<const double>(x0.data() + lo, width));
  }
  JacobianReport report;
  const std::size_t k_lo = level ? *level : 0;
  const std::size_t k_hi = level ? *level + 1 : fan.levels();
  for (std::size_t k = k_lo; k < k_hi; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = true;
      double fd = 0.0;
      for (std::size_t j = 0; j < width && ok; ++j) {
        ok = fan.valid(first[i] + j, k);
        fd += weights[i][j] * fan.at(first[i] + j, k).x;
      }
      if (!ok) continue;
      const double J = fan.at(i, k).J;
      const double dev = std::fabs(J - fd) / std::max(std::fabs(J), 1.0);
      if (dev > report.max_deviation) report = {dev, i, fan.time(k)};
    }
  }
  return report;
}

}  // namespace tunnelshock

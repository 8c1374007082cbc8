#include "tunnelshock/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"

namespace tunnelshock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridMin {
  double y = 0.0;
  double f = kInf;
  std::size_t index = 0;
};

}  // namespace

double hopf_lax(const SymbolModel& symbol, const InitialAction& S0, double x, double t, const HopfLaxOptions& options) {
  if (!symbol.homogeneous()) throw ValidationError("hopf_lax requires a spatially homogeneous symbol");
  if (!(t > 0.0)) throw ValidationError("hopf_lax requires t > 0");
  const std::size_t n = std::max<std::size_t>(options.grid, 5);
  const double v_lo = symbol.dP_dp(0.0, -options.momentum, t);
  const double v_hi = symbol.dP_dp(0.0, options.momentum, t);
  const double y_lo = x - t * v_hi;
  const double y_hi = x - t * v_lo;

  auto objective = [&](double y) {
    try {
      return S0.action(y) + t * symbol.legendre(0.0, (x - y) / t, t).L;
    } catch (const NumericalError& e) {
      if (e.kind() == Failure::no_root) return kInf;
      throw;
    }
  };

  const double dy = (y_hi - y_lo) / static_cast<double>(n - 1);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = objective(y_lo + dy * static_cast<double>(i));

  GridMin best;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || f[i] <= f[i - 1];
    const bool right = i + 1 == n || f[i] <= f[i + 1];
    if (!(left && right) || !std::isfinite(f[i])) continue;
    const double yc = y_lo + dy * static_cast<double>(i);
    const double a = std::max(y_lo, yc - 2.0 * dy);
    const double b = std::min(y_hi, yc + 2.0 * dy);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      const double y = a + h * static_cast<double>(j);
      const double v = objective(y);
      if (v < best.f) best = {y, v, i};
    }
  }
  if (!std::isfinite(best.f)) {
    throw NumericalError(Failure::no_root, fmt::format("no finite Hopf-Lax value at x = {}, t = {}", x, t));
  }
  if (best.y <= y_lo + 0.5 * dy || best.y >= y_hi - 0.5 * dy) {
    throw NumericalError(Failure::range,
                         fmt::format("box too small: Hopf-Lax minimiser y = {} on the boundary of [{}, {}]", best.y,
                                     y_lo, y_hi));
  }
  return best.f;
}

double godunov_flux(const SymbolModel& symbol, double vl, double vr, double t) {
  const double fl = symbol.P(0.0, vl, t);
  const double fr = symbol.P(0.0, vr, t);
  if (vl > vr) return std::max(fl, fr);
  // Minimum of a convex flux over [vl, vr]: interior sonic point if present.
  const double dl = symbol.dP_dp(0.0, vl, t);
  const double dr = symbol.dP_dp(0.0, vr, t);
  if (dl < 0.0 && dr > 0.0) {
    const double vs = symbol.legendre(0.0, 0.0, t).p;
    return symbol.P(0.0, vs, t);
  }
  return std::min(fl, fr);
}

double GodunovResult::at(double xq) const {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double x0 = x.front() - 0.5 * dx;
  auto i = static_cast<long>(std::floor((xq - x0) / dx));
  i = std::clamp(i, 0L, static_cast<long>(x.size()) - 1);
  return v[static_cast<std::size_t>(i)];
}

std::vector<double> locate_shocks(const std::vector<double>& x, const std::vector<double>& v, double threshold) {
  std::vector<double> out;
  const std::size_t n = v.size();
  if (n < 3) return out;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double jump = threshold * (*mx - *mn);
  if (!(jump > 0.0)) return out;
  const double dx = x[1] - x[0];
  std::size_t i = 0;
  while (i + 1 < n) {
    if (v[i] - v[i + 1] <= jump) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 2 < n && v[j + 1] - v[j + 2] > jump) ++j;
    const std::size_t a = i >= 3 ? i - 3 : 0;
    const std::size_t b = std::min(n - 1, j + 4);
    const double vl = v[a];
    const double vr = v[b];
    double area = 0.0;
    for (std::size_t k = a; k <= b; ++k) area += (v[k] - vr) * dx;
    out.push_back(x[a] - 0.5 * dx + area / (vl - vr));
    i = j + 1;
  }
  return out;
}

GodunovResult godunov(const SymbolModel& symbol, const std::function<double(double)>& v0,
                      const GodunovOptions& o) {
  if (!symbol.homogeneous()) throw ValidationError("godunov requires a spatially homogeneous symbol");
  if (o.cells < 3 || !(o.x_max > o.x_min)) throw ValidationError("godunov grid is empty");
  GodunovResult r;
  const std::size_t n = o.cells;
  r.dx = (o.x_max - o.x_min) / static_cast<double>(n);
  r.x.resize(n);
  r.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xc = o.x_min + (static_cast<double>(i) + 0.5) * r.dx;
    r.x[i] = xc;
    // Cell average by Simpson's rule on the cell.
    r.v[i] = (v0(xc - 0.5 * r.dx) + 4.0 * v0(xc) + v0(xc + 0.5 * r.dx)) / 6.0;
  }
  std::vector<double> flux(n + 1);
  double t = 0.0;
  while (t < o.T - 1e-14 * std::max(1.0, o.T)) {
    double speed = 0.0;
    for (double v : r.v) speed = std::max(speed, std::fabs(symbol.dP_dp(0.0, v, t)));
    const double bound = o.cfl * r.dx / std::max(speed, 1e-300);
    double dt = bound;
    if (o.dt) {
      if (*o.dt > bound * (1.0 + 1e-12)) {
        throw NumericalError(Failure::stability,
                             fmt::format("dt = {} exceeds the CFL bound {} (cfl {})", *o.dt, bound, o.cfl));
      }
      dt = *o.dt;
    }
    dt = std::min(dt, o.T - t);
    for (std::size_t k = 0; k <= n; ++k) {
      const double vl = r.v[k == 0 ? 0 : k - 1];
      const double vr = r.v[k == n ? n - 1 : k];
      flux[k] = godunov_flux(symbol, vl, vr, t);
    }
    for (std::size_t i = 0; i < n; ++i) r.v[i] -= dt / r.dx * (flux[i + 1] - flux[i]);
    t += dt;
    ++r.steps;
  }
  r.t = o.T;
  r.shocks = locate_shocks(r.x, r.v, o.shock_threshold);
  return r;
}

}  // namespace tunnelshock

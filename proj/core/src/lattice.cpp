#include "tunnelshock/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/numerics.hpp"

namespace tunnelshock {

namespace {

struct Coefficients {
  std::vector<double> A;
  std::vector<double> V;
  std::vector<std::vector<double>> lambda;
};

void fill(const SymbolModel& m, const std::vector<double>& x, double t, Coefficients& c) {
  const std::size_t n = x.size();
  c.A.resize(n);
  c.V.resize(n);
  c.lambda.resize(m.jumps().size());
  for (auto& l : c.lambda) l.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.A[i] = m.A()(x[i], t);
    c.V[i] = m.V()(x[i], t);
    for (std::size_t k = 0; k < m.jumps().size(); ++k) c.lambda[k][i] = m.jumps()[k].rate(x[i], t);
  }
}

std::vector<long> grid_shifts(const SymbolModel& m, double h, double dx) {
  std::vector<long> out;
  for (const auto& j : m.jumps()) {
    const double cells = j.nu * h / dx;
    const double r = std::round(cells);
    if (std::fabs(cells - r) > 1e-9 * std::max(1.0, std::fabs(cells))) {
      throw ValidationError(fmt::format("jump shift h*nu = {} is not a whole number of cells (dx = {})", j.nu * h, dx));
    }
    out.push_back(static_cast<long>(r));
  }
  return out;
}

}  // namespace

LatticeField lattice_initial(const std::function<double(double)>& S0, const std::function<double(double)>& phi0,
                             double h, double x_min, double x_max, double dx) {
  if (!(h > 0.0) || !(dx > 0.0) || !(x_max > x_min)) throw ValidationError("lattice needs h > 0, dx > 0 and a nonempty range");
  const double cells = (x_max - x_min) / dx;
  const auto n = static_cast<std::size_t>(std::llround(cells)) + 1;
  if (n < 5) throw ValidationError("lattice has fewer than 5 nodes");
  LatticeField f;
  f.h = h;
  f.dx = dx;
  f.x.resize(n);
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_min + dx * static_cast<double>(i);
    f.x[i] = x;
    f.values[i] = phi0(x) * std::exp(-S0(x) / h);
  }
  return f;
}

double lattice_stability_bound(const SymbolModel& symbol, const LatticeField& u0) {
  const std::size_t n = u0.x.size();
  const double h = u0.h;
  const double dx = u0.dx;
  Coefficients c;
  fill(symbol, u0.x, u0.t, c);
  double a_max = 0.0;
  double v_max = 0.0;
  double lam_max = 0.0;
  double speed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a_max = std::max(a_max, c.A[i]);
    v_max = std::max(v_max, std::fabs(c.V[i]));
    double lam = 0.0;
    for (const auto& l : c.lambda) lam += l[i];
    lam_max = std::max(lam_max, lam);
    if (i == 0 || i + 1 == n) continue;
    const double ul = u0.values[i - 1];
    const double ur = u0.values[i + 1];
    if (!(ul > 0.0) || !(ur > 0.0)) continue;
    double p = -h * (std::log(ur) - std::log(ul)) / (2.0 * dx);
    p = std::clamp(p, symbol.box().lo, symbol.box().hi);
    speed = std::max(speed, std::fabs(symbol.dP_dp(u0.x[i], p, u0.t)));
  }
  double bound = std::numeric_limits<double>::infinity();
  if (a_max > 0.0) bound = std::min(bound, dx * dx / (2.0 * a_max * h));
  if (speed > 0.0) bound = std::min(bound, dx / speed);
  if (lam_max > 0.0) bound = std::min(bound, h / lam_max);
  if (v_max > 0.0) bound = std::min(bound, h / v_max);
  return bound;
}

LatticeField kf_lattice(const SymbolModel& symbol, const LatticeField& u0, double T, const LatticeOptions& options) {
  if (!(T >= 0.0)) throw ValidationError("kf_lattice needs T >= 0");
  const std::size_t n = u0.x.size();
  if (n < 5 || u0.values.size() != n) throw ValidationError("lattice field is malformed");
  const double h = u0.h;
  const double dx = u0.dx;
  const auto shifts = grid_shifts(symbol, h, dx);
  std::size_t reach = 1;
  for (long m : shifts) reach = std::max<std::size_t>(reach, static_cast<std::size_t>(std::labs(m)));
  if (2 * reach + 1 >= n) throw ValidationError("lattice too short for the jump reach");

  const double bound = options.cfl * lattice_stability_bound(symbol, u0);
  double dt_target = std::isfinite(bound) ? bound : std::max(T, 1e-300);
  if (options.dt) {
    if (*options.dt > bound * (1.0 + 1e-12)) {
      throw NumericalError(Failure::stability,
                           fmt::format("lattice dt = {} exceeds the stability bound {}", *options.dt, bound));
    }
    dt_target = *options.dt;
  }
  const auto steps = T > 0.0 ? static_cast<std::size_t>(std::ceil(T / dt_target - 1e-9)) : 0;
  const double dt = steps > 0 ? T / static_cast<double>(steps) : 0.0;

  bool positive = true;
  for (double v : u0.values) positive = positive && v > 0.0;

  LatticeField out = u0;
  out.reach = reach;
  out.dt = dt;
  out.dt_bound = bound;
  out.steps = steps;
  out.t = u0.t + T;
  auto& u = out.values;

  Coefficients coef;
  fill(symbol, u0.x, u0.t, coef);
  const double inv_h = 1.0 / h;
  const double diff = h / (dx * dx);
  const std::size_t lo = reach;
  const std::size_t hi = n - reach;  // interior is [lo, hi)

  auto rhs = [&](const std::vector<double>& w, double t, std::vector<double>& dw) {
    if (symbol.time_dependent()) fill(symbol, u0.x, t, coef);
    for (std::size_t i = lo; i < hi; ++i) {
      double r = coef.A[i] * diff * (w[i - 1] - 2.0 * w[i] + w[i + 1]) + coef.V[i] * inv_h * w[i];
      for (std::size_t k = 0; k < shifts.size(); ++k) {
        const auto j = static_cast<std::size_t>(static_cast<long>(i) - shifts[k]);
        r += coef.lambda[k][i] * inv_h * (w[j] - w[i]);
      }
      dw[i] = r;
    }
  };

  std::vector<double> k1(n, 0.0), k2(n, 0.0), k3(n, 0.0), k4(n, 0.0), w(u);
  const std::size_t probe_l = lo;
  const std::size_t probe_r = hi - 1;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = u0.t + dt * static_cast<double>(s);
    rhs(u, t, k1);
    for (std::size_t i = lo; i < hi; ++i) w[i] = u[i] + 0.5 * dt * k1[i];
    rhs(w, t + 0.5 * dt, k2);
    for (std::size_t i = lo; i < hi; ++i) w[i] = u[i] + 0.5 * dt * k2[i];
    rhs(w, t + 0.5 * dt, k3);
    for (std::size_t i = lo; i < hi; ++i) w[i] = u[i] + dt * k3[i];
    rhs(w, t + dt, k4);
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      peak = std::max(peak, std::fabs(u[i]));
    }
    const double edge = std::max(std::fabs(u[probe_l]), std::fabs(u[probe_r]));
    if (edge > options.contact_tolerance * peak) {
      throw NumericalError(Failure::boundary_contact,
                           fmt::format("lattice support reached the grid edge at t = {} ({:.3g} against max {:.3g})",
                                       t + dt, edge, peak));
    }
    if (!std::isfinite(peak)) {
      throw NumericalError(Failure::stability, fmt::format("lattice values overflowed at t = {}", t + dt));
    }
  }
  if (positive) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(u[i] > 0.0)) {
        throw NumericalError(Failure::stability, fmt::format("lattice positivity lost at x = {}", out.x[i]));
      }
    }
  }
  return out;
}

TunnelTable tunnel_compare(const std::vector<LatticeField>& lattice, const GeneralizedDensity& gd,
                           const TunnelCompareOptions& o) {
  TunnelTable table;
  const Fan& fan = gd.fan();
  const LagrangianCurve curve = slice_at(fan, o.t);
  const DensitySlice slice = gd.slice(o.t);
  std::vector<double> shock_x;
  for (const auto& s : slice.shocks()) shock_x.push_back(s.x);

  for (const auto& f : lattice) {
    if (std::fabs(f.t - o.t) > 1e-9 * std::max(1.0, o.t)) {
      throw ValidationError(fmt::format("lattice field at t = {} compared at t = {}", f.t, o.t));
    }
    const double collar = o.collar_cells * f.dx + o.smear_widths * f.h;
    std::vector<double> xs;
    std::vector<double> us;
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      const double x = f.x[i];
      if (x < o.x_lo - 1e-12 || x > o.x_hi + 1e-12) continue;
      bool near = false;
      for (double xs_ : shock_x) near = near || std::fabs(x - xs_) <= collar;
      if (near) continue;
      std::size_t cover = 0;
      for (const auto& b : curve.branches()) {
        if (x >= b.x_lo && x <= b.x_hi) ++cover;
      }
      if (cover != 1) continue;
      xs.push_back(x);
      us.push_back(f.values[i]);
    }
    TunnelRow row;
    row.h = f.h;
    if (!xs.empty()) {
      const EssentialSolution es = essential(curve, gd.symbol(), xs);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        if (es.branch_id[j] < 0) continue;
        const auto pt = slice.at(xs[j]);
        if (!pt || !(pt->R > 0.0)) continue;
        const double root = std::sqrt(pt->R);
        const double lifted = us[j] * std::exp(es.S[j] / f.h);
        row.error = std::max(row.error, std::fabs(lifted - root));
        row.relative = std::max(row.relative, std::fabs(lifted / root - 1.0));
        ++row.points;
      }
    }
    if (row.points == 0) {
      throw NumericalError(Failure::empty_comparison,
                           fmt::format("no regular lattice node in [{}, {}] at h = {}", o.x_lo, o.x_hi, f.h));
    }
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 2) {
    std::vector<double> lh, le, lr;
    for (const auto& r : table.rows) {
      lh.push_back(std::log(r.h));
      le.push_back(std::log(r.error));
      lr.push_back(std::log(r.relative));
    }
    table.fitted_order = numerics::fitted_slope(lh, le);
    table.fitted_order_relative = numerics::fitted_slope(lh, lr);
  } else {
    table.fitted_order = std::numeric_limits<double>::quiet_NaN();
    table.fitted_order_relative = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

}  // namespace tunnelshock

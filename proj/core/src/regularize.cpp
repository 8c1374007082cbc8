#include "tunnelshock/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/numerics.hpp"
#include "tunnelshock/parallel.hpp"

namespace tunnelshock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_stationary_homogeneous(const SymbolModel& m, const char* what) {
  if (!m.homogeneous()) throw ValidationError(fmt::format("{} requires a spatially homogeneous symbol", what));
  if (m.time_dependent()) throw ValidationError(fmt::format("{} requires a time-independent symbol", what));
}

/// Index k with t[k] <= t < t[k + 1], clamped to the table.
std::size_t bracket(const std::vector<double>& ts, double t) {
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - ts.begin() - 1));
  return std::min(k, ts.size() - 2);
}

}  // namespace

double blend(BlendProfile profile, double z) {
  switch (profile) {
    case BlendProfile::tanh: return 0.5 * (1.0 + std::tanh(z));
    case BlendProfile::erf: return 0.5 * (1.0 + std::erf(z));
  }
  return 0.0;
}

double blend_slope(BlendProfile profile, double z) {
  switch (profile) {
    case BlendProfile::tanh: {
      const double th = std::tanh(z);
      return 0.5 * (1.0 - th * th);
    }
    case BlendProfile::erf: return std::exp(-z * z) / std::sqrt(M_PI);
  }
  return 0.0;
}

void check_profile(BlendProfile profile) {
  double prev = blend(profile, -20.0);
  if (prev > 1e-12) throw ValidationError("blending profile does not start at 0");
  for (int i = 1; i <= 4000; ++i) {
    const double b = blend(profile, -20.0 + 0.01 * i);
    if (b < prev) throw ValidationError("blending profile is not monotone");
    prev = b;
  }
  if (prev < 1.0 - 1e-12) throw ValidationError("blending profile does not reach 1");
}

void RegularizationParams::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (epsilon > beta * beta * (1.0 + 1e-12)) {
    throw ValidationError(fmt::format("epsilon = {} exceeds beta^2 = {}", epsilon, beta * beta));
  }
  if (!(t1 > 0.0)) throw ValidationError("t1 must be positive");
  if (!(C_target > 0.0)) throw ValidationError("C_target must be positive");
  check_profile(profile);
}

double Insertion::momentum(const SymbolModel& symbol, double x0) const {
  return symbol.legendre(0.0, velocity(x0)).p;
}

Insertion build_insertion(const SymbolModel& symbol, const InitialAction& S0, double x0_star, double beta) {
  require_stationary_homogeneous(symbol, "the insertion");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  Insertion ins;
  ins.x0_star = x0_star;
  ins.beta = beta;
  ins.p_l = S0.momentum(x0_star - beta);
  ins.p_r = S0.momentum(x0_star + beta);
  ins.v_l = symbol.dP_dp(0.0, ins.p_l);
  ins.v_r = symbol.dP_dp(0.0, ins.p_r);
  ins.K = (ins.v_l - ins.v_r) / (2.0 * beta);
  if (!(ins.K > 0.0)) {
    throw ValidationError(fmt::format("no focusing across ({}, {}): K = {}", x0_star - beta, x0_star + beta, ins.K));
  }
  ins.b = ins.v_l + ins.K * (x0_star - beta);
  return ins;
}

PlateauSpeed plateau_speed(const SymbolModel& symbol, double x_l, double p_l, double x_r, double p_r, double t) {
  const double dp = p_r - p_l;
  if (std::fabs(dp) <= 1e-12) return {symbol.dP_dp(x_l, p_l, t), true};
  return {(symbol.P(x_r, p_r, t) - symbol.P(x_l, p_l, t)) / dp, false};
}

double PlateauPath::position(double tq) const {
  if (t.size() == 1 || tq <= t.front()) return x.front() + (tq - t.front()) * (tq < t.front() ? 0.0 : c.front());
  if (tq >= t.back()) return x.back() + (tq - t.back()) * c.back();
  const std::size_t k = bracket(t, tq);
  const double h = t[k + 1] - t[k];
  return numerics::Hermite{x[k], x[k + 1], c[k] * h, c[k + 1] * h}((tq - t[k]) / h);
}

double PlateauPath::speed(double tq) const {
  if (t.size() == 1 || tq <= t.front()) return c.front();
  if (tq >= t.back()) return c.back();
  const std::size_t k = bracket(t, tq);
  const double h = t[k + 1] - t[k];
  return numerics::Hermite{x[k], x[k + 1], c[k] * h, c[k + 1] * h}.slope((tq - t[k]) / h) / h;
}

PlateauPath plateau_path(const SymbolModel& symbol, const InitialAction& S0, const Insertion& ins, double T,
                         double x0_lo, double x0_hi, std::size_t steps) {
  require_stationary_homogeneous(symbol, "the plateau path");
  const double edge_l = ins.x0_star - ins.beta;
  const double edge_r = ins.x0_star + ins.beta;
  auto plain_x = [&](double x0, double t) { return x0 + t * symbol.dP_dp(0.0, S0.momentum(x0)); };

  // Anchor on one side: the outermost x0 whose plain trajectory has reached X.
  auto anchor = [&](double t, double X, double hint, int side) {
    const double edge = side < 0 ? edge_l : edge_r;
    const double limit = side < 0 ? x0_lo : x0_hi;
    auto f = [&](double x0) { return side * (X - plain_x(x0, t)); };
    if (f(edge) <= 0.0) return edge;
    double inner = side < 0 ? std::min(hint, edge) : std::max(hint, edge);
    if (f(inner) > 0.0) inner = edge;
    double step = 1e-3 * (1.0 + ins.beta);
    double outer = inner;
    for (;;) {
      outer = inner + side * step;
      if (side * (outer - limit) >= 0.0) {
        outer = limit;
        if (f(outer) > 0.0) {
          throw NumericalError(Failure::branch_exhausted,
                               fmt::format("plateau at x = {} absorbs the whole fan side by t = {}", X, t));
        }
        break;
      }
      if (f(outer) <= 0.0) break;
      inner = outer;
      step *= 2.0;
    }
    return numerics::find_root(f, std::min(inner, outer), std::max(inner, outer));
  };

  PlateauPath path;
  const double t0 = ins.onset();
  double X = ins.b / ins.K;
  double hl = edge_l;
  double hr = edge_r;
  auto speed = [&](double t, double Xq, double& al, double& ar) {
    al = anchor(t, Xq, hl, -1);
    ar = anchor(t, Xq, hr, +1);
    return plateau_speed(symbol, Xq, S0.momentum(al), Xq, S0.momentum(ar)).c;
  };
  double al = edge_l;
  double ar = edge_r;
  double c = plateau_speed(symbol, X, ins.p_l, X, ins.p_r).c;
  path.t.push_back(t0);
  path.x.push_back(X);
  path.c.push_back(c);
  path.x0_l.push_back(al);
  path.x0_r.push_back(ar);
  if (!(T > t0)) return path;
  const std::size_t n = std::max<std::size_t>(steps, 2);
  const double h = (T - t0) / static_cast<double>(n);
  double t = t0;
  for (std::size_t i = 0; i < n; ++i) {
    double a, b;
    const double k1 = c;
    const double k2 = speed(t + 0.5 * h, X + 0.5 * h * k1, a, b);
    const double k3 = speed(t + 0.5 * h, X + 0.5 * h * k2, a, b);
    const double k4 = speed(t + h, X + h * k3, a, b);
    X += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + h * static_cast<double>(i + 1);
    c = speed(t, X, al, ar);
    hl = al;
    hr = ar;
    path.t.push_back(t);
    path.x.push_back(X);
    path.c.push_back(c);
    path.x0_l.push_back(al);
    path.x0_r.push_back(ar);
  }
  return path;
}

BlendedFlow::BlendedFlow(SymbolModel symbol, InitialAction S0, std::optional<Insertion> ins,
                         std::optional<PlateauPath> path, BlendProfile profile, double epsilon, double A, double T,
                         const std::vector<double>& x0_grid)
    : symbol_(std::move(symbol)),
      S0_(std::move(S0)),
      ins_(std::move(ins)),
      path_(std::move(path)),
      profile_(profile),
      epsilon_(epsilon),
      A_(A),
      T_(T) {
  std::vector<Row> rows(x0_grid.size());
  parallel_for(x0_grid.size(), [&](std::size_t i) { rows[i] = compute_row(x0_grid[i]); });
  for (std::size_t i = 0; i < x0_grid.size(); ++i) cache_.emplace(x0_grid[i], rows[i]);
}

double BlendedFlow::onset_time(double x0, double v) const {
  if (!path_ || !ins_) return kInf;
  const PlateauPath& P = *path_;
  const bool left = x0 <= ins_->x0_star - ins_->beta;
  const auto& anchors = left ? P.x0_l : P.x0_r;
  // Anchors move outward monotonically; find the first path time that reaches x0.
  std::size_t k = 0;
  if (left) {
    if (anchors.back() > x0) return kInf;
    k = static_cast<std::size_t>(std::lower_bound(anchors.begin(), anchors.end(), x0, std::greater<double>()) - anchors.begin());
  } else {
    if (anchors.back() < x0) return kInf;
    k = static_cast<std::size_t>(std::lower_bound(anchors.begin(), anchors.end(), x0) - anchors.begin());
  }
  if (k == 0) return P.t.front();
  auto g = [&](double t) { return x0 + t * v - P.position(t); };
  const double a = P.t[k - 1];
  const double b = P.t[k];
  if ((g(a) < 0.0) == (g(b) < 0.0)) return std::fabs(g(a)) < std::fabs(g(b)) ? a : b;
  return numerics::find_root(g, a, b);
}

BlendedFlow::Row BlendedFlow::compute_row(double x0) const {
  Row r;
  if (ins_ && ins_->contains(x0)) {
    r.inserted = true;
    r.p = ins_->momentum(symbol_, x0);
    r.v = ins_->velocity(x0);
    r.dv = -ins_->K;
    r.dp = r.dv / symbol_.hess(0.0, r.p);
    r.t_i = ins_->onset();
    r.dt_i = 0.0;
    return r;
  }
  r.p = S0_.momentum(x0);
  r.dp = S0_.curvature(x0);
  r.v = symbol_.dP_dp(0.0, r.p);
  r.dv = symbol_.hess(0.0, r.p) * r.dp;
  r.t_i = onset_time(x0, r.v);
  if (std::isfinite(r.t_i)) {
    const double J_plain = 1.0 + r.t_i * r.dv;
    const double rel = r.v - path_->speed(r.t_i);
    r.dt_i = std::fabs(rel) > 1e-300 ? -J_plain / rel : 0.0;
  }
  return r;
}

BlendedFlow::Row BlendedFlow::row(double x0) const {
  const auto it = cache_.find(x0);
  return it != cache_.end() ? it->second : compute_row(x0);
}

TrajectoryPoint BlendedFlow::initial(double x0) const {
  const Row r = row(x0);
  TrajectoryPoint y;
  y.t = 0.0;
  y.x = x0;
  y.p = r.p;
  y.S = S0_.action(x0);
  y.J = 1.0;
  y.dp = r.dp;
  y.a_int = 0.0;
  return y;
}

double BlendedFlow::blend_at(double x0, double t) const {
  const Row r = row(x0);
  if (!std::isfinite(r.t_i)) return 0.0;
  return blend(profile_, (t - r.t_i) / epsilon_ + A_);
}

int BlendedFlow::substeps(double x0, double t_a, double t_b, int base) const {
  const Row r = row(x0);
  if (!std::isfinite(r.t_i)) return base;
  // Outside |z| <= 20 the blend is within 1e-17 of 0 or 1.
  const double lo = r.t_i - (20.0 + A_) * epsilon_;
  const double hi = r.t_i + (20.0 - A_) * epsilon_;
  if (t_b < lo || t_a > hi) return base;
  return std::max(base, static_cast<int>(std::ceil((t_b - t_a) / (epsilon_ / 16.0) - 1e-9)));
}

void BlendedFlow::rhs(double x0, const TrajectoryPoint& y, TrajectoryPoint& dy) const {
  const Row r = row(x0);
  double B = 0.0;
  double dB = 0.0;
  if (std::isfinite(r.t_i)) {
    const double z = (y.t - r.t_i) / epsilon_ + A_;
    B = blend(profile_, z);
    dB = blend_slope(profile_, z);
  }
  const double c = path_ ? path_->speed(y.t) : 0.0;
  dy.x = (1.0 - B) * r.v + B * c;
  dy.p = 0.0;
  dy.S = y.p * dy.x - symbol_.P(0.0, y.p, y.t);
  dy.J = (1.0 - B) * r.dv + dB / epsilon_ * r.dt_i * (r.v - c);
  dy.dp = 0.0;
  dy.a_int = 0.0;
}

double BlendedFlow::absorbed_mass(const Expression& rho0, double t, double x0_lo, double x0_hi, double tol) const {
  if (!ins_ || !path_) return 0.0;
  const double edge_l = ins_->x0_star - ins_->beta;
  const double edge_r = ins_->x0_star + ins_->beta;
  auto f = [&](double x0) { return rho0(x0) * blend_at(x0, t); };
  double total = blend(profile_, (t - ins_->onset()) / epsilon_ + A_) *
                 numerics::adaptive_simpson([&](double x0) { return rho0(x0); }, edge_l, edge_r, tol);
  // Split each side at the current anchor, where B_i passes through its steep part.
  const double ta = std::clamp(t + A_ * epsilon_, path_->t.front(), path_->t.back());
  const std::size_t k = path_->t.size() > 1 ? bracket(path_->t, ta) : 0;
  auto lerp = [&](const std::vector<double>& v) {
    if (path_->t.size() == 1) return v.front();
    const double s = (ta - path_->t[k]) / (path_->t[k + 1] - path_->t[k]);
    return v[k] + s * (v[k + 1] - v[k]);
  };
  const double al = std::clamp(lerp(path_->x0_l), x0_lo, edge_l);
  const double ar = std::clamp(lerp(path_->x0_r), edge_r, x0_hi);
  total += numerics::adaptive_simpson(f, x0_lo, al, tol) + numerics::adaptive_simpson(f, al, edge_l, tol);
  total += numerics::adaptive_simpson(f, edge_r, ar, tol) + numerics::adaptive_simpson(f, ar, x0_hi, tol);
  return total;
}

double insertion_min_jacobian(const Insertion& ins, BlendProfile profile, double epsilon, double A, double T) {
  const double t_on = ins.onset();
  // Before t_on - 40 epsilon the blend is below 1e-34 and J = 1 - K t.
  const double t_start = std::max(0.0, std::min(T, t_on - 40.0 * epsilon));
  double J = 1.0 - ins.K * t_start;
  auto rate = [&](double t) { return -ins.K * (1.0 - blend(profile, (t - t_on) / epsilon + A)); };
  const double span = T - t_start;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / (epsilon / 16.0))));
  const double h = span / static_cast<double>(n);
  double m = T >= t_on ? kInf : J;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_start + h * static_cast<double>(i);
    const double k1 = rate(t);
    const double k2 = rate(t + 0.5 * h);
    const double k4 = rate(t + h);
    J += h / 6.0 * (k1 + 4.0 * k2 + k4);
    if (t + h >= t_on) m = std::min(m, J);
  }
  return std::isfinite(m) ? m : J;
}

double tune_shift(const Insertion& ins, BlendProfile profile, double epsilon, double C_target, double T) {
  const double target = 0.5 * C_target * epsilon;
  auto ok = [&](double A) { return insertion_min_jacobian(ins, profile, epsilon, A, T) >= target; };
  if (ok(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 100.0;
  if (!ok(hi)) {
    throw NumericalError(Failure::tuning,
                         fmt::format("no shift in [0, 100] gives min J >= {} (epsilon = {})", target, epsilon));
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

/// Focal point of the plain homogeneous flow: argmin of -1 / (dv/dx0) over dv < 0.
std::optional<double> focal_origin(const SymbolModel& symbol, const InitialAction& S0, const std::vector<double>& grid) {
  auto rate = [&](double x0) { return symbol.hess(0.0, S0.momentum(x0)) * S0.curvature(x0); };
  std::optional<std::size_t> best;
  double best_rate = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = rate(grid[i]);
    if (r < best_rate) {
      best_rate = r;
      best = i;
    }
  }
  if (!best) return std::nullopt;
  const std::size_t i = *best;
  const double a = grid[i == 0 ? 0 : i - 1];
  const double b = grid[std::min(i + 1, grid.size() - 1)];
  if (!(b > a)) return grid[i];
  return numerics::minimize(rate, a, b);
}

}  // namespace

RegularizedFan blended_fan(const SymbolModel& symbol, const InitialAction& S0, const std::vector<double>& x0_grid,
                           const RegularizationParams& params, const FanOptions& options,
                           std::optional<double> x0_star) {
  require_stationary_homogeneous(symbol, "the blended fan");
  params.validate();
  if (x0_grid.size() < 2) throw ValidationError("blended fan needs at least two rows");
  RegularizedFan out;
  if (!x0_star) x0_star = focal_origin(symbol, S0, x0_grid);
  std::optional<PlateauPath> path;
  if (x0_star) {
    out.insertion = build_insertion(symbol, S0, *x0_star, params.beta);
    const auto steps = static_cast<std::size_t>(std::max(4000.0, std::ceil(options.T / (params.epsilon / 4.0))));
    // Rows reaching the plateau shortly after T still feel the blend before T.
    const double T_path = options.T + 50.0 * params.epsilon;
    path = plateau_path(symbol, S0, *out.insertion, T_path, x0_grid.front(), x0_grid.back(), steps);
    out.A = params.A_shift ? *params.A_shift
                           : tune_shift(*out.insertion, params.profile, params.epsilon, params.C_target, options.T);
    out.min_J_insertion = insertion_min_jacobian(*out.insertion, params.profile, params.epsilon, out.A, options.T);
  }
  auto flow = std::make_shared<const BlendedFlow>(symbol, S0, out.insertion, path, params.profile, params.epsilon,
                                                  out.A, options.T, x0_grid);
  FanOptions o = options;
  out.flow = flow;
  out.fan = std::make_shared<const Fan>(
      integrate_fan(flow, x0_grid, [flow](double x0) { return flow->initial(x0); }, o));
  return out;
}

LimitReport limit_study(const GeneralizedDensity& reference, const InitialAction& S0, const LimitStudyOptions& o) {
  if (o.epsilons.empty()) throw ValidationError("limit study needs at least one epsilon");
  for (std::size_t i = 1; i < o.epsilons.size(); ++i) {
    if (!(o.epsilons[i] < o.epsilons[i - 1])) throw ValidationError("epsilon schedule must decrease");
  }
  const Fan& ref_fan = reference.fan();
  const std::vector<double> grid = o.x0_grid.empty() ? ref_fan.x0_grid() : o.x0_grid;
  std::optional<double> x0_star;
  try {
    x0_star = first_singularity(ref_fan).x0;
  } catch (const NumericalError& e) {
    if (e.kind() != Failure::no_singularity) throw;
  }

  LimitReport report;
  report.rows.resize(o.epsilons.size());
  const unsigned outer = o.threads == 0 ? default_threads() : o.threads;
  parallel_for(
      o.epsilons.size(),
      [&](std::size_t i) {
        const double eps = o.epsilons[i];
        RegularizationParams params;
        params.epsilon = eps;
        params.beta = std::sqrt(eps);
        params.profile = o.profile;
        params.C_target = o.C_target;
        FanOptions fo;
        fo.T = ref_fan.T();
        fo.h_t = ref_fan.h_t();
        fo.threads = 1;
        const RegularizedFan rf = x0_star ? blended_fan(reference.symbol(), S0, grid, params, fo, x0_star)
                                          : blended_fan(reference.symbol(), S0, grid, params, fo, std::nullopt);
        LimitRow row;
        row.epsilon = eps;
        row.beta = params.beta;
        row.A = rf.A;
        row.collar = o.collar_factor * eps * std::log(1.0 / eps);
        row.min_J_over_eps = rf.insertion ? rf.min_J_insertion / eps : 0.0;
        for (double t : o.times) {
          const DensitySlice slice = reference.slice(t);
          std::vector<double> centres;
          for (const auto& s : slice.shocks()) centres.push_back(s.x);
          if (rf.flow->path()) centres.push_back(rf.flow->path()->position(t));
          const Fan& fan = *rf.fan;
          for (std::size_t r = 0; r < fan.rows(); ++r) {
            const double x0 = fan.x0(r);
            if (rf.insertion && rf.insertion->contains(x0)) continue;
            const TrajectoryPoint st = fan.state_at(r, t);
            bool near = false;
            for (double c : centres) near = near || std::fabs(st.x - c) <= row.collar;
            if (near) continue;
            const auto pt = slice.at(st.x);
            if (!pt) continue;
            const double R_eps = st.J > 0.0 ? reference.rho0()(x0) / st.J : kInf;
            const double err = std::fabs(R_eps - pt->R);
            row.sup_R_error = std::isnan(err) ? kInf : std::max(row.sup_R_error, err);
            ++row.compared;
          }
          const double e_eps = rf.flow->absorbed_mass(reference.rho0(), t, grid.front(), grid.back());
          const double e_ref = slice.singular_mass();
          if (!std::isfinite(e_eps) || !std::isfinite(e_ref)) {
            throw NumericalError(Failure::domain, fmt::format("non-finite amplitude at t = {} (eps = {})", t, eps));
          }
          row.e_error = std::max(row.e_error, std::fabs(e_eps - e_ref));
        }
        report.rows[i] = row;
      },
      outer);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    report.R_decreasing = report.R_decreasing && report.rows[i].sup_R_error < report.rows[i - 1].sup_R_error;
    report.e_decreasing = report.e_decreasing && report.rows[i].e_error < report.rows[i - 1].e_error;
  }
  return report;
}

SurgeryCurve surgery(const SymbolModel& symbol, const Fan& fan, double t_star, double beta, double t1,
                     std::size_t segment_points) {
  if (symbol.time_dependent()) throw ValidationError("surgery requires a time-independent symbol");
  if (!(beta > 0.0) || !(t1 > 0.0)) throw ValidationError("surgery needs beta > 0 and t1 > 0");
  if (segment_points < 2) throw ValidationError("surgery needs at least two segment points");
  const double tv = t_star + beta;
  if (tv > fan.T() * (1.0 + 1e-12)) throw ValidationError(fmt::format("t* + beta = {} is past the fan end", tv));
  if (t1 > tv) throw ValidationError("t1 exceeds t* + beta");

  const Singularity sing = first_singularity(fan);
  const double spread = sing.k * std::sqrt(std::max(tv - sing.t, 0.0));
  const ShockState shock = ShockSolver(fan, symbol).state(tv, sing.x0 - spread, sing.x0 + spread);
  const LagrangianCurve full = slice_at(fan, tv);

  SurgeryCurve out;
  out.t_vertical = tv;
  out.t_start = tv - t1;
  out.sigma_1 = shock.x0_l;
  out.sigma_2 = shock.x0_r;
  auto sample = [](double sigma, const TrajectoryPoint& y) {
    return CurveSample{sigma, y.x, y.p, y.S, y.J, y.dp, y.a_int};
  };
  for (const auto& s : full.samples()) {
    if (s.x0 < shock.x0_l) out.vertical.push_back(s);
  }
  out.vertical.push_back(sample(shock.x0_l, shock.left));
  const double dsigma = shock.x0_r - shock.x0_l;
  const double dp = (shock.right.p - shock.left.p) / dsigma;
  for (std::size_t j = 1; j + 1 < segment_points; ++j) {
    const double l = static_cast<double>(j) / static_cast<double>(segment_points - 1);
    CurveSample s;
    s.x0 = shock.x0_l + l * dsigma;
    s.x = shock.x;
    s.p = shock.left.p + l * (shock.right.p - shock.left.p);
    s.S = 0.5 * (shock.left.S + shock.right.S);
    s.J = 0.0;
    s.dp = dp;
    s.a_int = shock.left.a_int + l * (shock.right.a_int - shock.left.a_int);
    out.vertical.push_back(s);
  }
  out.vertical.push_back(sample(shock.x0_r, shock.right));
  for (const auto& s : full.samples()) {
    if (s.x0 > shock.x0_r) out.vertical.push_back(s);
  }

  const HamiltonianFlow flow(symbol);
  const double max_step = fan.h_t() / std::max(1, fan.substeps());
  out.samples.resize(out.vertical.size());
  parallel_for(out.vertical.size(), [&](std::size_t i) {
    const CurveSample& s = out.vertical[i];
    TrajectoryPoint y{tv, s.x, s.p, s.S, s.J, s.dp, s.a_int};
    out.samples[i] = sample(s.x0, flow.advance(s.x0, y, out.t_start, max_step));
  });
  for (const auto& s : out.samples) {
    if (s.x0 == shock.x0_l) out.a1 = s.x;
    if (s.x0 == shock.x0_r) out.a2 = s.x;
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const auto& s = out.samples[i];
    const bool increasing = i == 0 || s.x > out.samples[i - 1].x;
    if (!(s.J > 0.0) || !increasing) {
      throw NumericalError(Failure::regularity,
                           fmt::format("pulled-back curve folds at sigma = {} (x = {}, J = {}); t1 = {} is too large",
                                       s.x0, s.x, s.J, t1));
    }
  }
  return out;
}

Fan surgery_fan(const SymbolModel& symbol, const SurgeryCurve& curve, FanOptions options) {
  const double span = curve.t_vertical - curve.t_start;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / options.h_t - 1e-9)));
  options.h_t = span / static_cast<double>(n);
  options.T = span;
  std::vector<double> grid;
  for (const auto& s : curve.samples) grid.push_back(s.x0);
  auto lc = std::make_shared<const LagrangianCurve>(curve.curve());
  auto samples = std::make_shared<const std::vector<CurveSample>>(curve.samples);
  auto initial = [lc, samples](double sigma) {
    const auto it = std::lower_bound(samples->begin(), samples->end(), sigma,
                                     [](const CurveSample& s, double v) { return s.x0 < v; });
    const CurveSample s = it != samples->end() && it->x0 == sigma ? *it : lc->at_x0(sigma);
    return TrajectoryPoint{0.0, s.x, s.p, s.S, s.J, s.dp, s.a_int};
  };
  return integrate_fan(std::make_shared<const HamiltonianFlow>(symbol), grid, initial, options);
}

}  // namespace tunnelshock

#include "tunnelshock/manifold.hpp"

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

/// First zero of J after level k on a trajectory whose state at level k is y.
double refine_zero(const Fan& fan, double x0, const TrajectoryPoint& y) {
  const double h = fan.h_t() / fan.substeps();
  auto J_at = [&](double t) { return fan.flow().advance(x0, y, t, h).J; };
  return numerics::find_root(J_at, y.t, y.t + fan.h_t(), 1e-15);
}

double row_zero_time(const Fan& fan, std::size_t row) {
  for (std::size_t k = 1; k < fan.levels(); ++k) {
    if (!fan.valid(row, k)) return kInf;
    if (fan.at(row, k).J <= 0.0) {
      if (fan.at(row, k - 1).J <= 0.0) return fan.time(k - 1);
      return refine_zero(fan, fan.x0(row), fan.at(row, k - 1));
    }
  }
  return kInf;
}

Singularity refine_singularity(const Fan& fan, std::size_t r, double t_row) {
  const auto& g = fan.x0_grid();
  Singularity s;
  s.x0 = g[r];
  s.t = t_row;
  if (r > 0 && r + 1 < g.size()) {
    auto tz = [&](double x0) { return first_zero_time(fan, x0); };
    const double lo = g[r - 1];
    const double hi = g[r + 1];
    const double x0 = numerics::minimize(tz, lo, hi);
    const double t0 = tz(x0);
    if (t0 < s.t) {
      s.x0 = x0;
      s.t = t0;
    }
    const double d = 0.5 * std::min(hi - g[r], g[r] - lo);
    const double tm = tz(s.x0 - d);
    const double tp = tz(s.x0 + d);
    const double second = (tp - 2.0 * s.t + tm) / (d * d);
    if (std::isfinite(second) && second > 0.0) s.k = std::sqrt(6.0 / second);
  }
  s.x = fan.trajectory(s.x0, s.t).x;
  return s;
}

std::vector<double> row_zero_times(const Fan& fan) {
  std::vector<double> tz(fan.rows());
  parallel_for(fan.rows(), [&](std::size_t r) { tz[r] = row_zero_time(fan, r); });
  return tz;
}

}  // namespace

double first_zero_time(const Fan& fan, double x0) {
  TrajectoryPoint y = fan.initial(x0);
  y.t = 0.0;
  const double h = fan.h_t() / fan.substeps();
  for (std::size_t k = 1; k < fan.levels(); ++k) {
    TrajectoryPoint next = y;
    for (int s = 0; s < fan.substeps(); ++s) next = fan.flow().step(x0, next, h);
    next.t = fan.time(k);
    if (next.J <= 0.0) {
      if (y.J <= 0.0) return y.t;
      return refine_zero(fan, x0, y);
    }
    y = next;
  }
  return kInf;
}

Singularity first_singularity(const Fan& fan) {
  const auto tz = row_zero_times(fan);
  const auto it = std::min_element(tz.begin(), tz.end());
  if (it == tz.end() || !std::isfinite(*it)) {
    throw NumericalError(Failure::no_singularity, "J > 0 on every trajectory of the fan");
  }
  // A plateau of equal first-zero times (all rows focusing at once) keeps its middle row.
  std::size_t r = static_cast<std::size_t>(it - tz.begin());
  std::size_t end = r;
  while (end + 1 < tz.size() && std::fabs(tz[end + 1] - *it) <= 1e-12 * (1.0 + *it)) ++end;
  if (end > r + 1) return refine_singularity(fan, (r + end) / 2, tz[(r + end) / 2]);
  return refine_singularity(fan, r, *it);
}

std::vector<Singularity> singularities(const Fan& fan) {
  const auto tz = row_zero_times(fan);
  const std::size_t n = tz.size();
  std::vector<Singularity> out;
  std::size_t r = 1;
  while (r + 1 < n) {
    if (!std::isfinite(tz[r])) {
      ++r;
      continue;
    }
    std::size_t end = r;
    while (end + 1 < n && std::fabs(tz[end + 1] - tz[r]) <= 1e-12 * (1.0 + tz[r])) ++end;
    const bool left_ok = tz[r - 1] > tz[r];
    const bool right_ok = end + 1 < n && tz[end + 1] > tz[r];
    if (left_ok && right_ok) out.push_back(refine_singularity(fan, (r + end) / 2, tz[(r + end) / 2]));
    r = end + 1;
  }
  std::sort(out.begin(), out.end(), [](const Singularity& a, const Singularity& b) { return a.t < b.t; });
  return out;
}

double rankine_hugoniot(const SymbolModel& symbol, double x, double p_l, double p_r, double t) {
  if (std::fabs(p_l - p_r) <= 1e-12) return symbol.dP_dp(x, 0.5 * (p_l + p_r), t);
  return (symbol.P(x, p_l, t) - symbol.P(x, p_r, t)) / (p_l - p_r);
}

ShockSolver::ShockSolver(const Fan& fan, const SymbolModel& symbol) : fan_(fan), symbol_(symbol) {}

std::optional<ShockState> ShockSolver::solve(double t, double a, double b) const {
  const double lo = fan_.x0_grid().front();
  const double hi = fan_.x0_grid().back();
  auto make = [&](double x0_l, double x0_r, const TrajectoryPoint& L, const TrajectoryPoint& R) {
    ShockState s;
    s.t = t;
    s.x = 0.5 * (L.x + R.x);
    s.left = L;
    s.right = R;
    s.x0_l = x0_l;
    s.x0_r = x0_r;
    s.u_l = symbol_.dP_dp(s.x, L.p, t);
    s.u_r = symbol_.dP_dp(s.x, R.p, t);
    s.c = rankine_hugoniot(symbol_, s.x, L.p, R.p, t);
    return s;
  };
  // Best iterate so far, measured by the scaled residual; used when round-off stalls Newton.
  std::optional<ShockState> best;
  double best_res = kInf;
  for (int it = 0; it < 60; ++it) {
    const TrajectoryPoint L = fan_.trajectory(a, t);
    const TrajectoryPoint R = fan_.trajectory(b, t);
    const double dx = L.x - R.x;
    const double dS = L.S - R.S;
    const double res = std::max(std::fabs(dx) / (1.0 + std::fabs(L.x)), std::fabs(dS) / (1.0 + std::fabs(L.S)));
    if (res <= 1e-13) return make(a, b, L, R);
    if (!(L.J > 0.0) || !(R.J > 0.0) || L.p == R.p) break;
    if (res < best_res) {
      best_res = res;
      best = make(a, b, L, R);
    }
    const double A = (R.p * dx - dS) / (L.p - R.p);
    double da = A / L.J;
    double db = (A + dx) / R.J;
    // Keep the pair ordered and inside the fan.
    const double gap = b - a;
    const double limit = gap > 0.0 ? 0.45 * gap : kInf;
    const double big = std::max(std::fabs(da), std::fabs(db));
    if (gap > 0.0 && big > limit && (a + da >= b + db)) {
      da *= limit / big;
      db *= limit / big;
    }
    a += da;
    b += db;
    if (!(a >= lo && b <= hi) || !std::isfinite(a) || !std::isfinite(b)) break;
    if (it >= 8 && best_res <= 1e-10 && res >= 0.1 * best_res) break;
  }
  if (best && best_res <= 1e-10) return best;
  return std::nullopt;
}

ShockState ShockSolver::state(double t, double x0_l, double x0_r) const {
  auto s = solve(t, x0_l, x0_r);
  if (!s) {
    throw NumericalError(Failure::non_convergence,
                         fmt::format("equal-action solve failed at t = {} from anchors ({}, {})", t, x0_l, x0_r));
  }
  return *s;
}

std::pair<double, double> ShockRecord::anchors_guess(double t) const {
  const bool focal = !from_merge();
  auto tau = [&](double tt) { return focal ? std::sqrt(std::max(0.0, tt - t_birth)) : tt; };
  if (path.size() == 1) {
    if (focal) {
      const double s = tau(t);
      return {x0_birth - k_birth * s, x0_birth + k_birth * s};
    }
    return {path[0].x0_l, path[0].x0_r};
  }
  std::size_t j = path.size() - 1;
  if (t <= path.back().t) {
    j = 1;
    while (j + 1 < path.size() && path[j].t < t) ++j;
  }
  const auto& a = path[j - 1];
  const auto& b = path[j];
  const double ta = tau(a.t), tb = tau(b.t), tt = tau(t);
  const double w = tb != ta ? (tt - ta) / (tb - ta) : 1.0;
  return {a.x0_l + w * (b.x0_l - a.x0_l), a.x0_r + w * (b.x0_r - a.x0_r)};
}

std::vector<int> ShockSystem::active_at(double t) const {
  std::vector<int> ids;
  for (const auto& s : shocks) {
    if (s.t_birth <= t && (s.status != ShockStatus::merged || s.t_end > t)) ids.push_back(s.id);
  }
  return ids;
}

ShockSample make_sample(const ShockState& s) {
  ShockSample out;
  out.t = s.t;
  out.x = s.x;
  out.c = s.c;
  out.p_l = s.left.p;
  out.p_r = s.right.p;
  out.u_l = s.u_l;
  out.u_r = s.u_r;
  out.x0_l = s.x0_l;
  out.x0_r = s.x0_r;
  out.J_l = s.left.J;
  out.J_r = s.right.J;
  out.a_l = s.left.a_int;
  out.a_r = s.right.a_int;
  out.S = 0.5 * (s.left.S + s.right.S);
  return out;
}

namespace {

/// Equal-action point on the grid slice by bisection on S_l - S_r over the overlap
/// of the branches containing the anchor guesses.
std::optional<std::pair<double, double>> grid_anchors(const Fan& fan, double t, double ga, double gb) {
  const auto curve = slice_at(fan, t);
  int bl = -1, br = -1;
  for (std::size_t b = 0; b < curve.branches().size(); ++b) {
    const auto& B = curve.branches()[b];
    if (B.sign < 0) continue;
    if (B.x0_lo <= ga && ga <= B.x0_hi) bl = static_cast<int>(b);
    if (B.x0_lo <= gb && gb <= B.x0_hi) br = static_cast<int>(b);
  }
  if (bl < 0 || br < 0 || bl == br) return std::nullopt;
  const auto& L = curve.branches()[static_cast<std::size_t>(bl)];
  const auto& R = curve.branches()[static_cast<std::size_t>(br)];
  const double lo = std::max(L.x_lo, R.x_lo);
  const double hi = std::min(L.x_hi, R.x_hi);
  if (!(lo < hi)) return std::nullopt;
  auto diff = [&](double x) {
    return curve.invert(static_cast<std::size_t>(bl), x)->S - curve.invert(static_cast<std::size_t>(br), x)->S;
  };
  try {
    const double xs = numerics::find_root(diff, lo, hi, 1e-14);
    return std::make_pair(curve.invert(static_cast<std::size_t>(bl), xs)->x0,
                          curve.invert(static_cast<std::size_t>(br), xs)->x0);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

ShockState advance_to(const ShockSolver& solver, const ShockRecord& rec, double t) {
  const auto [ga, gb] = rec.anchors_guess(t);
  if (auto s = solver.solve(t, ga, gb)) return *s;
  if (auto g = grid_anchors(solver.fan(), t, ga, gb)) {
    if (auto s = solver.solve(t, g->first, g->second)) return *s;
  }
  const double lo = solver.fan().x0_grid().front();
  const double hi = solver.fan().x0_grid().back();
  if (ga <= lo || gb >= hi || (!rec.path.empty() && (rec.path.back().x0_l <= lo || rec.path.back().x0_r >= hi))) {
    throw NumericalError(Failure::branch_exhausted, fmt::format("shock {} reached the fan edge at t = {}", rec.id, t));
  }
  throw NumericalError(Failure::non_convergence,
                       fmt::format("shock {}: equal-action point not found at t = {}", rec.id, t));
}

void check_edge(const Fan& fan, const ShockRecord& rec, const ShockSample& s) {
  const auto& g = fan.x0_grid();
  const double margin = 2.0 * (g[1] - g[0]);
  if (s.x0_l <= g.front() + margin || s.x0_r >= g.back() - margin) {
    throw NumericalError(Failure::branch_exhausted,
                         fmt::format("shock {} reached the fan edge at t = {}", rec.id, s.t));
  }
}

void check_lax(const ShockRecord& rec, const ShockSample& s, const TrackOptions& opt) {
  if (s.t - rec.t_birth <= opt.lax_skip) return;
  if (!(s.u_l - s.c > opt.lax_tolerance && s.c - s.u_r > opt.lax_tolerance)) {
    throw NumericalError(Failure::admissibility,
                         fmt::format("Lax condition fails on shock {} at t = {}: u_l = {}, c = {}, u_r = {}", rec.id,
                                     s.t, s.u_l, s.c, s.u_r));
  }
}

/// A level this close to the previous sample adds nothing but a degenerate
/// first step for the amplitude.
bool too_close(double t_prev, double t) { return t - t_prev <= 1e-9 * std::max(1.0, std::fabs(t)); }

ShockRecord born_at(const Fan& fan, const SymbolModel& symbol, const Singularity& seed, int id) {
  ShockRecord rec;
  rec.id = id;
  rec.t_birth = seed.t;
  rec.x_birth = seed.x;
  rec.x0_birth = seed.x0;
  rec.k_birth = seed.k;
  const TrajectoryPoint y = fan.trajectory(seed.x0, seed.t);
  ShockSample s;
  s.t = seed.t;
  s.x = y.x;
  s.p_l = s.p_r = y.p;
  s.u_l = s.u_r = s.c = symbol.dP_dp(y.x, y.p, seed.t);
  s.x0_l = s.x0_r = seed.x0;
  s.J_l = s.J_r = 0.0;
  s.a_l = s.a_r = y.a_int;
  s.S = y.S;
  rec.path.push_back(s);
  return rec;
}

}  // namespace

ShockRecord track_shock(const Fan& fan, const SymbolModel& symbol, const Singularity& seed,
                        const TrackOptions& options) {
  ShockSolver solver(fan, symbol);
  ShockRecord rec = born_at(fan, symbol, seed, 0);
  for (std::size_t k = 0; k < fan.levels(); ++k) {
    const double t = fan.time(k);
    if (t <= seed.t || too_close(seed.t, t)) continue;
    const ShockSample s = make_sample(advance_to(solver, rec, t));
    check_edge(fan, rec, s);
    check_lax(rec, s, options);
    rec.path.push_back(s);
  }
  rec.t_end = fan.T();
  return rec;
}

ShockSystem track_shocks(const Fan& fan, const SymbolModel& symbol, const TrackOptions& options) {
  ShockSolver solver(fan, symbol);
  ShockSystem sys;
  const auto seeds = singularities(fan);
  std::size_t next_seed = 0;
  std::vector<int> active;


  for (std::size_t k = 1; k < fan.levels(); ++k) {
    const double t = fan.time(k);
    // Births up to t.
    while (next_seed < seeds.size() && seeds[next_seed].t <= t) {
      const auto& sd = seeds[next_seed++];
      bool absorbed = false;
      for (int id : active) {
        const auto [a, b] = sys.shocks[id].anchors_guess(sd.t);
        if (a < sd.x0 && sd.x0 < b) absorbed = true;
      }
      if (absorbed) continue;
      sys.shocks.push_back(born_at(fan, symbol, sd, static_cast<int>(sys.shocks.size())));
      active.push_back(sys.shocks.back().id);
    }
    for (int id : active) {
      auto& rec = sys.shocks[id];
      if (too_close(rec.path.back().t, t)) continue;
      const ShockSample s = make_sample(advance_to(solver, rec, t));
      check_edge(fan, rec, s);
      check_lax(rec, s, options);
      rec.path.push_back(s);
    }
    // Merges: resolve crossings of neighbours, earliest first.
    for (;;) {
      std::sort(active.begin(), active.end(), [&](int a, int b) {
        const auto& pa = sys.shocks[a].path;
        const auto& pb = sys.shocks[b].path;
        // Order by position before this step, which is well defined.
        const double xa = pa.size() > 1 ? pa[pa.size() - 2].x : pa.back().x;
        const double xb = pb.size() > 1 ? pb[pb.size() - 2].x : pb.back().x;
        return xa < xb;
      });
      double best_t = kInf;
      std::size_t best_i = 0;
      for (std::size_t i = 0; i + 1 < active.size(); ++i) {
        const auto& A = sys.shocks[active[i]];
        const auto& B = sys.shocks[active[i + 1]];
        if (A.path.back().x < B.path.back().x) continue;
        // Bisection on x_A - x_B between the last time both existed and t.
        double lo = std::max({fan.time(k - 1), A.t_birth, B.t_birth});
        double hi = t;
        auto gap = [&](double tt) {
          return advance_to(solver, A, tt).x - advance_to(solver, B, tt).x;
        };
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (gap(mid) < 0.0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        if (hi < best_t) {
          best_t = hi;
          best_i = i;
        }
      }
      if (!std::isfinite(best_t)) break;
      const int ia = active[best_i];
      const int ib = active[best_i + 1];
      const ShockState sa = advance_to(solver, sys.shocks[ia], best_t);
      const ShockState sb = advance_to(solver, sys.shocks[ib], best_t);
      if (std::fabs(sa.c - sb.c) < 1e-8) {
        throw NumericalError(Failure::tangential_merge,
                             fmt::format("shocks {} and {} meet tangentially at t = {}", ia, ib, best_t));
      }
      ShockRecord child;
      child.id = static_cast<int>(sys.shocks.size());
      child.t_birth = best_t;
      child.parents = {ia, ib};
      const ShockState sc = solver.state(best_t, sa.x0_l, sb.x0_r);
      child.x_birth = sc.x;
      child.x0_birth = 0.5 * (sc.x0_l + sc.x0_r);
      child.path.push_back(make_sample(sc));
      for (int id : {ia, ib}) {
        auto& parent = sys.shocks[id];
        while (!parent.path.empty() && parent.path.back().t > best_t) parent.path.pop_back();
        parent.path.push_back(make_sample(id == ia ? sa : sb));
        parent.status = ShockStatus::merged;
        parent.merged_into = child.id;
        parent.t_end = best_t;
      }
      sys.merges.push_back({best_t, sc.x, {ia, ib}, child.id});
      if (t > best_t) {
        const ShockSample s = make_sample(advance_to(solver, child, t));
        check_lax(child, s, options);
        child.path.push_back(s);
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_i), active.begin() + static_cast<std::ptrdiff_t>(best_i) + 2);
      sys.shocks.push_back(std::move(child));
      active.push_back(sys.shocks.back().id);
    }
  }
  for (int id : active) sys.shocks[id].t_end = fan.T();
  return sys;
}

}  // namespace tunnelshock

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/manifold.hpp"
#include "tunnelshock/numerics.hpp"
#include "tunnelshock/parallel.hpp"

namespace tunnelshock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool usable(const CurveSample& s) { return std::isfinite(s.x) && std::isfinite(s.J); }

CurveSample from_point(double x0, const TrajectoryPoint& p) { return {x0, p.x, p.p, p.S, p.J, p.dp, p.a_int}; }

}  // namespace

LagrangianCurve::LagrangianCurve(double t, std::vector<CurveSample> samples) : t_(t), samples_(std::move(samples)) {
  const std::size_t n = samples_.size();
  std::size_t i = 0;
  while (i < n) {
    if (!usable(samples_[i])) {
      ++i;
      continue;
    }
    const int sign = samples_[i].J > 0.0 ? 1 : -1;
    std::size_t j = i;
    while (j + 1 < n && usable(samples_[j + 1]) && (samples_[j + 1].J > 0.0 ? 1 : -1) == sign) ++j;
    Branch b;
    b.first = i;
    b.last = j;
    b.sign = sign;
    b.x0_lo = samples_[i].x0;
    b.x0_hi = samples_[j].x0;
    if (i > 0 && usable(samples_[i - 1])) {
      const auto& a = samples_[i - 1];
      const auto& c = samples_[i];
      b.x0_lo = a.x0 + (c.x0 - a.x0) * a.J / (a.J - c.J);
    }
    if (j + 1 < n && usable(samples_[j + 1])) {
      const auto& a = samples_[j];
      const auto& c = samples_[j + 1];
      b.x0_hi = a.x0 + (c.x0 - a.x0) * a.J / (a.J - c.J);
    }
    const double xa = at_x0(b.x0_lo).x;
    const double xb = at_x0(b.x0_hi).x;
    b.x_lo = std::min(xa, xb);
    b.x_hi = std::max(xa, xb);
    branches_.push_back(b);
    i = j + 1;
  }
}

std::size_t LagrangianCurve::segment(double x0) const {
  const std::size_t n = samples_.size();
  if (n < 2) return 0;
  auto it = std::upper_bound(samples_.begin(), samples_.end(), x0,
                             [](double v, const CurveSample& s) { return v < s.x0; });
  std::size_t m = static_cast<std::size_t>(it - samples_.begin());
  m = m == 0 ? 0 : m - 1;
  return std::min(m, n - 2);
}

CurveSample LagrangianCurve::at_x0(double x0) const {
  const std::size_t n = samples_.size();
  if (n == 1) return samples_[0];
  const std::size_t m = segment(x0);
  const auto& a = samples_[m];
  const auto& b = samples_[m + 1];
  if (!usable(a) || !usable(b)) return {x0, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};
  const double h = b.x0 - a.x0;
  const double s = (x0 - a.x0) / h;
  if (s == 0.0) return a;
  if (s == 1.0) return b;
  CurveSample r;
  r.x0 = x0;
  r.x = numerics::Hermite{a.x, b.x, a.J * h, b.J * h}(s);
  r.p = numerics::Hermite{a.p, b.p, a.dp * h, b.dp * h}(s);
  r.S = numerics::Hermite{a.S, b.S, a.p * a.J * h, b.p * b.J * h}(s);
  std::size_t lo = m == 0 ? 0 : m - 1;
  if (lo + 3 >= n) lo = n >= 4 ? n - 4 : 0;
  bool four = n >= 4;
  for (std::size_t k = lo; four && k < lo + 4; ++k) four = usable(samples_[k]);
  if (four) {
    std::array<double, 4> xs{}, js{}, as{};
    for (std::size_t k = 0; k < 4; ++k) {
      xs[k] = samples_[lo + k].x0;
      js[k] = samples_[lo + k].J;
      as[k] = samples_[lo + k].a_int;
    }
    r.J = numerics::lagrange4(xs, js, x0);
    r.a_int = numerics::lagrange4(xs, as, x0);
  } else {
    r.J = a.J + s * (b.J - a.J);
    r.a_int = a.a_int + s * (b.a_int - a.a_int);
  }
  r.dp = numerics::Hermite{a.p, b.p, a.dp * h, b.dp * h}.slope(s) / h;
  return r;
}

std::optional<CurveSample> LagrangianCurve::invert_range(double x, double lo, double hi, int sign) const {
  if (!(lo < hi)) return std::nullopt;
  // Nodes: lo, samples strictly inside, hi.
  auto first = std::upper_bound(samples_.begin(), samples_.end(), lo,
                                [](double v, const CurveSample& s) { return v < s.x0; });
  auto last = std::lower_bound(samples_.begin(), samples_.end(), hi,
                               [](const CurveSample& s, double v) { return s.x0 < v; });
  std::vector<double> nodes;
  std::vector<double> xs;
  nodes.reserve(static_cast<std::size_t>(last - first) + 2);
  nodes.push_back(lo);
  xs.push_back(at_x0(lo).x);
  for (auto it = first; it != last; ++it) {
    nodes.push_back(it->x0);
    xs.push_back(it->x);
  }
  nodes.push_back(hi);
  xs.push_back(at_x0(hi).x);
  const double x_min = sign > 0 ? xs.front() : xs.back();
  const double x_max = sign > 0 ? xs.back() : xs.front();
  if (!(x >= x_min && x <= x_max)) return std::nullopt;
  // Binary search for the bracketing node pair.
  std::size_t a = 0, b = nodes.size() - 1;
  while (b - a > 1) {
    const std::size_t mid = (a + b) / 2;
    if ((xs[mid] - x) * sign <= 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  if (xs[a] == x) return at_x0(nodes[a]);
  if (xs[b] == x) return at_x0(nodes[b]);
  // Safeguarded Newton on the Hermite cubic of the segment containing [nodes[a], nodes[b]].
  const std::size_t m = segment(0.5 * (nodes[a] + nodes[b]));
  const auto& sa = samples_[m];
  const auto& sb = samples_[m + 1];
  const double h = sb.x0 - sa.x0;
  const numerics::Hermite H{sa.x, sb.x, sa.J * h, sb.J * h};
  double s_lo = (nodes[a] - sa.x0) / h;
  double s_hi = (nodes[b] - sa.x0) / h;
  double f_lo = H(s_lo) - x;
  double s = 0.5 * (s_lo + s_hi);
  if (xs[b] != xs[a]) s = s_lo + (s_hi - s_lo) * (x - xs[a]) / (xs[b] - xs[a]);
  for (int it = 0; it < 100; ++it) {
    const double f = H(s) - x;
    if (f == 0.0) break;
    if ((f > 0.0) == (f_lo > 0.0)) {
      s_lo = s;
      f_lo = f;
    } else {
      s_hi = s;
    }
    const double df = H.slope(s);
    double next = df != 0.0 ? s - f / df : 0.5 * (s_lo + s_hi);
    if (!(next > std::min(s_lo, s_hi) && next < std::max(s_lo, s_hi))) next = 0.5 * (s_lo + s_hi);
    if (std::fabs(next - s) <= 1e-16 || std::fabs(s_hi - s_lo) <= 1e-16) {
      s = next;
      break;
    }
    s = next;
  }
  return at_x0(sa.x0 + s * h);
}

std::optional<CurveSample> LagrangianCurve::invert(std::size_t b, double x) const {
  const Branch& br = branches_.at(b);
  if (!(x >= br.x_lo && x <= br.x_hi)) return std::nullopt;
  return invert_range(x, br.x0_lo, br.x0_hi, br.sign);
}

std::optional<CurveSample> LagrangianCurve::invert_window(double x, double x0_lo, double x0_hi) const {
  if (samples_.empty()) return std::nullopt;
  x0_lo = std::max(x0_lo, samples_.front().x0);
  x0_hi = std::min(x0_hi, samples_.back().x0);
  return invert_range(x, x0_lo, x0_hi, 1);
}

LagrangianCurve slice(const Fan& fan, double t) {
  const std::size_t k = fan.level_of(t);
  std::vector<CurveSample> samples(fan.rows());
  for (std::size_t r = 0; r < fan.rows(); ++r) samples[r] = from_point(fan.x0(r), fan.at(r, k));
  return LagrangianCurve(fan.time(k), std::move(samples));
}

LagrangianCurve slice_at(const Fan& fan, double t, double x0_lo, double x0_hi) {
  const auto& g = fan.x0_grid();
  auto lo_it = std::lower_bound(g.begin(), g.end(), x0_lo);
  auto hi_it = std::upper_bound(g.begin(), g.end(), x0_hi);
  std::size_t lo = static_cast<std::size_t>(lo_it - g.begin());
  std::size_t hi = static_cast<std::size_t>(hi_it - g.begin());
  lo = lo >= 2 ? lo - 2 : 0;
  hi = std::min(g.size(), hi + 2);
  if (hi <= lo) return LagrangianCurve(t, {});
  std::vector<CurveSample> samples(hi - lo);
  parallel_for(samples.size(), [&](std::size_t i) { samples[i] = from_point(g[lo + i], fan.state_at(lo + i, t)); });
  return LagrangianCurve(t, std::move(samples));
}

bool EssentialSolution::all_covered() const {
  return std::all_of(branch_id.begin(), branch_id.end(), [](int b) { return b >= 0; });
}

EssentialSolution essential(const LagrangianCurve& curve, const SymbolModel& symbol, const std::vector<double>& x_grid) {
  EssentialSolution out;
  out.t = curve.t();
  out.x = x_grid;
  const std::size_t n = x_grid.size();
  out.S.assign(n, kNaN);
  out.u.assign(n, kNaN);
  out.p.assign(n, kNaN);
  out.x0.assign(n, kNaN);
  out.branch_id.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_grid[i];
    std::optional<CurveSample> best;
    int best_b = -1;
    for (std::size_t b = 0; b < curve.branches().size(); ++b) {
      auto s = curve.invert(b, x);
      if (!s) continue;
      bool take = !best;
      if (best) {
        const double tol = 1e-12 * (1.0 + std::fabs(best->S));
        if (s->S < best->S - tol) {
          take = true;
        } else if (std::fabs(s->S - best->S) <= tol && std::fabs(s->p) < std::fabs(best->p)) {
          take = true;
        }
      }
      if (take) {
        best = s;
        best_b = static_cast<int>(b);
      }
    }
    if (!best) continue;
    out.S[i] = best->S;
    out.p[i] = best->p;
    out.x0[i] = best->x0;
    out.u[i] = symbol.dP_dp(x, best->p, curve.t());
    out.branch_id[i] = best_b;
  }
  return out;
}

}  // namespace tunnelshock

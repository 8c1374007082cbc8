#include "tunnelshock/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/numerics.hpp"
#include "tunnelshock/parallel.hpp"

namespace tunnelshock {

namespace {

double g(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return q * q * q;
}

double dg(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return -6.0 * s * q * q;
}

[[noreturn]] void clipped(const BumpTestFunction& z, const std::string& why) {
  throw NumericalError(Failure::support_clipping,
                       fmt::format("test function at ({}, {}) with radii ({}, {}) {}", z.x_c, z.t_c, z.r_x, z.r_t, why));
}

/// x-interval covered by the regular pieces at t.
std::pair<double, double> coverage(const DensitySlice& s) {
  if (s.pieces().empty()) return {0.0, 0.0};
  return {s.pieces().front().x_lo, s.pieces().back().x_hi};
}

}  // namespace

double BumpTestFunction::value(double x, double t) const { return g((x - x_c) / r_x) * g((t - t_c) / r_t); }

double BumpTestFunction::dx(double x, double t) const { return dg((x - x_c) / r_x) / r_x * g((t - t_c) / r_t); }

double BumpTestFunction::dt(double x, double t) const { return g((x - x_c) / r_x) * dg((t - t_c) / r_t) / r_t; }

double BumpTestFunction::norm() const {
  constexpr double c = 32.0 / 35.0;
  return r_x * r_t * c * c;
}

bool contains_focal_birth(const GeneralizedDensity& gd, const BumpTestFunction& zeta) {
  for (const auto& s : gd.shocks()) {
    if (s.from_merge()) continue;
    if (s.t_birth > zeta.t_c - zeta.r_t && s.t_birth < zeta.t_c + zeta.r_t) return true;
  }
  return false;
}

double identity_residual(const GeneralizedDensity& gd, const BumpTestFunction& z, int level) {
  if (level < 1 || level > 16) throw ValidationError(fmt::format("quadrature level {} out of range", level));
  if (!(z.r_x > 0.0) || !(z.r_t > 0.0)) throw ValidationError("test function radii must be positive");
  const double T = gd.fan().T();
  const double t_lo = z.t_c - z.r_t;
  const double t_hi = z.t_c + z.r_t;
  if (!(t_lo > 0.0)) clipped(z, "reaches t = 0");
  if (t_hi > T * (1.0 + 1e-12)) clipped(z, fmt::format("extends past T = {}", T));
  const double x_lo = z.x_c - z.r_x;
  const double x_hi = z.x_c + z.r_x;

  std::vector<double> breaks{t_lo, t_hi};
  for (const auto& s : gd.shocks()) {
    if (s.t_birth > t_lo && s.t_birth < t_hi) breaks.push_back(s.t_birth);
  }
  for (const auto& m : gd.merges()) {
    if (m.t > t_lo && m.t < t_hi) breaks.push_back(m.t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const bool stratum = !gd.a_field().automatic && gd.options().stratum_term;
  const int panels = 1 << level;
  double total = 0.0;
  for (std::size_t r = 0; r + 1 < breaks.size(); ++r) {
    const double ta = breaks[r];
    const double tb = breaks[r + 1];
    if (!(tb > ta)) continue;
    const std::vector<int> ids = gd.active(0.5 * (ta + tb));
    for (int j = 0; j <= panels; ++j) {
      const double t = ta + (tb - ta) * static_cast<double>(j) / panels;
      const double wt = numerics::simpson_weight(j, panels, ta, tb);
      const DensitySlice slice = gd.slice(t);
      const auto [c_lo, c_hi] = coverage(slice);
      if (x_lo < c_lo || x_hi > c_hi) clipped(z, fmt::format("leaves the fan image [{}, {}] at t = {}", c_lo, c_hi, t));

      double area = 0.0;
      for (std::size_t k = 0; k < slice.pieces().size(); ++k) {
        const double a = std::max(x_lo, slice.pieces()[k].x_lo);
        const double b = std::min(x_hi, slice.pieces()[k].x_hi);
        if (!(b > a)) continue;
        for (int i = 0; i <= panels; ++i) {
          const double x = a + (b - a) * static_cast<double>(i) / panels;
          const auto pt = slice.on_piece(k, x);
          if (!pt) clipped(z, fmt::format("meets an uncovered point x = {} at t = {}", x, t));
          const double integrand = pt->R * (z.dt(x, t) + pt->u * z.dx(x, t) - pt->a * z.value(x, t));
          area += numerics::simpson_weight(i, panels, a, b) * integrand;
        }
      }

      double line = 0.0;
      for (int id : ids) {
        const ShockSample s = gd.shock_at(id, t);
        double w = z.dt(s.x, t) + s.c * z.dx(s.x, t);
        if (stratum) w -= gd.a_field().f.eval(Bindings{s.x, t, s.c}) * z.value(s.x, t);
        line += s.e * w;
      }
      total += wt * (area + line);
    }
  }
  return std::fabs(total);
}

double IdentityReport::max_residual(int level) const {
  double m = 0.0;
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.levels.size(); ++i) {
      if (e.levels[i] == level) m = std::max(m, e.residuals[i]);
    }
  }
  return m;
}

double IdentityReport::min_order() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.orders.size(); ++i) {
      if (e.residuals[i + 1] <= kRoundoffFloor) continue;
      m = std::min(m, e.orders[i]);
    }
  }
  return m;
}

IdentityReport identity_suite(const GeneralizedDensity& gd, int count, std::uint64_t seed,
                              const IdentityOptions& options) {
  if (count < 1) throw ValidationError("identity suite needs at least one test function");
  if (options.levels.empty()) throw ValidationError("identity suite needs at least one quadrature level");
  const double T = gd.fan().T();

  // x-interval covered at every one of a few times across [t_lo, t_hi].
  auto covered = [&](double t_lo, double t_hi) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 4; ++i) {
      const auto [a, b] = coverage(gd.slice(t_lo + (t_hi - t_lo) * i / 4.0));
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    }
    return std::pair{lo, hi};
  };
  auto fit_x = [&](BumpTestFunction& z) {
    const auto [lo, hi] = covered(z.t_c - z.r_t, z.t_c + z.r_t);
    const double room = 0.95 * std::min(z.x_c - lo, hi - z.x_c);
    z.r_x = std::min({z.r_x, room});
    return z.r_x > 0.0;
  };
  auto avoid_births = [&](BumpTestFunction& z) {
    for (int i = 0; i < 40 && contains_focal_birth(gd, z); ++i) z.r_t *= 0.7;
    return !contains_focal_birth(gd, z) && z.r_t > 1e-6 * T;
  };

  std::vector<IdentityEntry> entries;
  for (const auto& s : gd.shocks()) {
    const double te = s.status == ShockStatus::merged ? s.t_end : T;
    if (!(te > s.t_birth)) continue;
    BumpTestFunction z;
    z.t_c = 0.5 * (s.t_birth + te);
    z.r_t = 0.45 * (te - s.t_birth);
    if (!avoid_births(z)) continue;
    z.x_c = gd.shock_at(s.id, z.t_c).x;
    z.r_x = 1.0;
    if (!fit_x(z)) continue;
    entries.push_back({0, z, "shock", {}, {}, {}});
  }
  for (const auto& m : gd.merges()) {
    double t_prev = 0.0;
    for (int p : m.parents) t_prev = std::max(t_prev, gd.shocks()[static_cast<std::size_t>(p)].t_birth);
    BumpTestFunction z;
    z.t_c = m.t;
    z.x_c = m.x;
    z.r_t = 0.45 * std::min(m.t - t_prev, T - m.t);
    if (!(z.r_t > 0.0) || !avoid_births(z)) continue;
    z.r_x = 1.0;
    if (!fit_x(z)) continue;
    entries.push_back({0, z, "merge", {}, {}, {}});
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&](double a, double b) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  };
  for (int placed = 0, attempts = 0; placed < count && attempts < 1000; ++attempts) {
    BumpTestFunction z;
    z.r_t = uniform(0.05, 0.25) * T;
    z.t_c = uniform(z.r_t * 1.001, T - z.r_t);
    if (contains_focal_birth(gd, z)) continue;
    const auto [lo, hi] = covered(z.t_c - z.r_t, z.t_c + z.r_t);
    if (!(hi > lo)) continue;
    const double width = hi - lo;
    z.r_x = std::min(uniform(0.05, 0.25) * width, 2.0);
    z.x_c = uniform(lo + 1.05 * z.r_x, hi - 1.05 * z.r_x);
    if (z.x_c - z.r_x <= lo || z.x_c + z.r_x >= hi) continue;
    entries.push_back({0, z, "random", {}, {}, {}});
    ++placed;
  }
  if (entries.empty()) throw NumericalError(Failure::empty_comparison, "no test function could be placed");

  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].bump = i;
    entries[i].levels = options.levels;
    entries[i].residuals.assign(options.levels.size(), 0.0);
  }
  const std::size_t L = options.levels.size();
  parallel_for(
      entries.size() * L,
      [&](std::size_t job) {
        auto& e = entries[job / L];
        e.residuals[job % L] = identity_residual(gd, e.zeta, options.levels[job % L]);
      },
      options.threads);
  for (auto& e : entries) {
    for (std::size_t i = 0; i + 1 < L; ++i) e.orders.push_back(std::log2(e.residuals[i] / e.residuals[i + 1]));
  }
  return IdentityReport{std::move(entries)};
}

double hj_residual(const std::vector<EssentialSolution>& S, const SymbolModel& symbol) {
  double worst = 0.0;
  if (S.size() < 3) return worst;
  const std::size_t m = S.front().x.size();
  if (m < 3) return worst;
  for (const auto& s : S) {
    if (s.x.size() != m) throw ValidationError("hj_residual needs one x grid for every time");
  }
  const double dx = S[0].x[1] - S[0].x[0];
  for (std::size_t k = 1; k + 1 < S.size(); ++k) {
    const double dt2 = S[k + 1].t - S[k - 1].t;
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const int b = S[k].branch_id[i];
      if (b < 0 || S[k].branch_id[i - 1] != b || S[k].branch_id[i + 1] != b) continue;
      if (S[k - 1].branch_id[i] != b || S[k + 1].branch_id[i] != b) continue;
      const double vals[] = {S[k].S[i - 1], S[k].S[i + 1], S[k - 1].S[i], S[k + 1].S[i]};
      bool ok = true;
      for (double v : vals) ok = ok && std::isfinite(v);
      if (!ok) continue;
      const double St = (S[k + 1].S[i] - S[k - 1].S[i]) / dt2;
      const double Sx = (S[k].S[i + 1] - S[k].S[i - 1]) / (2.0 * dx);
      worst = std::max(worst, std::fabs(St + symbol.P(S[k].x[i], Sx, S[k].t)));
    }
  }
  return worst;
}

}  // namespace tunnelshock

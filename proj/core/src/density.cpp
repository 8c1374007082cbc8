#include "tunnelshock/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/numerics.hpp"

namespace tunnelshock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_time(double a, double b) { return std::fabs(a - b) <= 1e-13 * std::max(1.0, std::fabs(a)); }

/// Path interval [j-1, j] containing t (clamped to the path).
std::size_t interval_of(const ShockRecord& rec, double t) {
  std::size_t j = 1;
  while (j + 1 < rec.path.size() && rec.path[j].t < t) ++j;
  return j;
}

}  // namespace

GeneralizedDensity::GeneralizedDensity(std::shared_ptr<const Fan> fan, SymbolModel symbol, Expression rho0,
                                       AField a_field, DensityOptions options)
    : fan_(std::move(fan)),
      symbol_(std::make_shared<const SymbolModel>(std::move(symbol))),
      rho0_(std::move(rho0)),
      a_field_(std::move(a_field)),
      options_(options) {}

void GeneralizedDensity::set_shocks(std::vector<ShockRecord> shocks, std::vector<ShockEvent> merges) {
  shocks_ = std::move(shocks);
  merges_ = std::move(merges);
}

double GeneralizedDensity::cauchy(double x0, double J, double a_int) const {
  return rho0_(x0) / std::fabs(J) * std::exp(-a_int);
}

double GeneralizedDensity::R_row(std::size_t row, std::size_t level) const {
  const auto& y = fan_->at(row, level);
  return cauchy(fan_->x0(row), y.J, y.a_int);
}

ShockSample GeneralizedDensity::shock_geometry(const ShockRecord& rec, double t) const {
  for (const auto& s : rec.path) {
    if (same_time(s.t, t)) return s;
  }
  const auto [a, b] = rec.anchors_guess(t);
  return make_sample(solver().state(t, a, b));
}

double GeneralizedDensity::amplitude_rate(const ShockSample& s, double e) const {
  double rate = s.R_l * (s.u_l - s.c) - s.R_r * (s.u_r - s.c);
  if (!a_field_.automatic && options_.stratum_term) rate -= a_field_.f.eval(Bindings{s.x, s.t, s.c}) * e;
  return rate;
}

double amplitude_dense(const ShockRecord& rec, double t) {
  if (rec.path.size() == 1 || t <= rec.path.front().t) return rec.path.front().e;
  if (t >= rec.path.back().t) return rec.path.back().e;
  const std::size_t j = interval_of(rec, t);
  const auto& a = rec.path[j - 1];
  const auto& b = rec.path[j];
  const bool focal = !rec.from_merge();
  if (focal) {
    const double sa = std::sqrt(std::max(0.0, a.t - rec.t_birth));
    const double sb = std::sqrt(std::max(0.0, b.t - rec.t_birth));
    const double s = std::sqrt(std::max(0.0, t - rec.t_birth));
    const double ds = sb - sa;
    const double da = j == 1 ? rec.birth_slope : 2.0 * sa * a.de;
    const double db = 2.0 * sb * b.de;
    return numerics::Hermite{a.e, b.e, da * ds, db * ds}((s - sa) / ds);
  }
  const double dt = b.t - a.t;
  return numerics::Hermite{a.e, b.e, a.de * dt, b.de * dt}((t - a.t) / dt);
}

double GeneralizedDensity::amplitude(int id, double t) const { return amplitude_dense(shocks_.at(id), t); }

ShockSample GeneralizedDensity::shock_at(int id, double t) const {
  const auto& rec = shocks_.at(id);
  for (const auto& p : rec.path) {
    if (same_time(p.t, t)) return p;
  }
  ShockSample s = shock_geometry(rec, t);
  s.R_l = cauchy(s.x0_l, s.J_l, s.a_l);
  s.R_r = cauchy(s.x0_r, s.J_r, s.a_r);
  s.e = amplitude_dense(rec, t);
  s.de = amplitude_rate(s, s.e);
  return s;
}

std::vector<int> GeneralizedDensity::active(double t) const {
  std::vector<std::pair<double, int>> order;
  for (const auto& s : shocks_) {
    if (s.t_birth > t && !same_time(s.t_birth, t)) continue;
    if (s.status == ShockStatus::merged && s.t_end <= t) continue;
    if (t > s.path.back().t && !same_time(t, s.path.back().t)) continue;
    order.emplace_back(shock_geometry(s, t).x, s.id);
  }
  std::sort(order.begin(), order.end());
  std::vector<int> ids;
  for (const auto& [x, id] : order) ids.push_back(id);
  return ids;
}

double GeneralizedDensity::initial_mass(double tol) const {
  const auto& g = fan_->x0_grid();
  return numerics::adaptive_simpson([&](double x) { return rho0_(x); }, g.front(), g.back(), tol);
}

GeneralizedDensity transport_R(std::shared_ptr<const Fan> fan, const SymbolModel& symbol, const Expression& rho0,
                               const AField& a_field, const DensityOptions& options) {
  return GeneralizedDensity(std::move(fan), symbol, rho0, a_field, options);
}

void evolve_amplitude(const GeneralizedDensity& gd, ShockRecord& rec) {
  const bool focal = !rec.from_merge();
  auto& path = rec.path;
  auto fill = [&](ShockSample& s) {
    s.R_l = gd.cauchy(s.x0_l, s.J_l, s.a_l);
    s.R_r = gd.cauchy(s.x0_r, s.J_r, s.a_r);
  };
  // Rate in the integration variable tau (s = sqrt(t - t_b) for focal births, t otherwise).
  auto rate = [&](double tau, double e) {
    const double t = focal ? rec.t_birth + tau * tau : tau;
    if (focal && tau == 0.0) return rec.birth_slope;
    ShockSample s = gd.shock_geometry(rec, t);
    fill(s);
    const double F = gd.amplitude_rate(s, e);
    return focal ? 2.0 * tau * F : F;
  };

  ShockSample& first = path.front();
  if (focal) {
    const TrajectoryPoint y = gd.fan().trajectory(rec.x0_birth, rec.t_birth);
    rec.birth_slope = 2.0 * gd.rho0()(rec.x0_birth) * std::exp(-y.a_int) * rec.k_birth;
    first.e = 0.0;
    first.R_l = first.R_r = kInf;
    first.de = kInf;
  } else {
    fill(first);
    first.de = gd.amplitude_rate(first, first.e);
  }

  double e = first.e;
  for (std::size_t j = 1; j < path.size(); ++j) {
    const double ta = focal ? std::sqrt(std::max(0.0, path[j - 1].t - rec.t_birth)) : path[j - 1].t;
    const double tb = focal ? std::sqrt(std::max(0.0, path[j].t - rec.t_birth)) : path[j].t;
    const int n = (focal && j == 1) ? gd.options().first_substeps : gd.options().substeps;
    const double h = (tb - ta) / n;
    for (int i = 0; i < n; ++i) {
      const double tau = ta + h * i;
      const double k1 = rate(tau, e);
      const double k2 = rate(tau + 0.5 * h, e + 0.5 * h * k1);
      const double k3 = rate(tau + 0.5 * h, e + 0.5 * h * k2);
      const double k4 = rate(tau + h, e + h * k3);
      e += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    ShockSample& s = path[j];
    fill(s);
    s.e = e;
    s.de = gd.amplitude_rate(s, e);
    if (e < -1e-10) {
      throw NumericalError(Failure::admissibility,
                           fmt::format("shock {} amplitude became negative ({}) at t = {}", rec.id, e, s.t));
    }
  }
}

ShockRecord merge(const GeneralizedDensity& gd, const ShockRecord& s1, const ShockRecord& s2, double t_merge, int id) {
  const double e1 = amplitude_dense(s1, t_merge);
  const double e2 = amplitude_dense(s2, t_merge);
  const ShockSample g1 = gd.shock_geometry(s1, t_merge);
  const ShockSample g2 = gd.shock_geometry(s2, t_merge);
  const double dc = std::fabs(g1.c - g2.c);
  if (dc < 1e-8) {
    throw NumericalError(Failure::tangential_merge,
                         fmt::format("shocks {} and {} meet tangentially at t = {}", s1.id, s2.id, t_merge));
  }
  const bool s1_left = g1.x0_l < g2.x0_l;
  const double a = s1_left ? g1.x0_l : g2.x0_l;
  const double b = s1_left ? g2.x0_r : g1.x0_r;
  ShockRecord child;
  child.id = id;
  child.t_birth = t_merge;
  child.parents = {s1.id, s2.id};
  ShockSample s = make_sample(gd.solver().state(t_merge, a, b));
  s.R_l = gd.cauchy(s.x0_l, s.J_l, s.a_l);
  s.R_r = gd.cauchy(s.x0_r, s.J_r, s.a_r);
  s.e = gd.options().kirchhoff_factor * (e1 + e2);
  s.de = gd.amplitude_rate(s, s.e);
  child.x_birth = s.x;
  child.x0_birth = 0.5 * (s.x0_l + s.x0_r);
  child.path.push_back(s);
  return child;
}

GeneralizedDensity build_density(std::shared_ptr<const Fan> fan, const SymbolModel& symbol, const Expression& rho0,
                                 const AField& a_field, const DensityOptions& options, const TrackOptions& track) {
  ShockSystem sys = track_shocks(*fan, symbol, track);
  GeneralizedDensity gd(std::move(fan), symbol, rho0, a_field, options);
  gd.set_shocks(std::move(sys.shocks), std::move(sys.merges));
  auto& shocks = gd.mutable_shocks();
  for (std::size_t i = 0; i < shocks.size(); ++i) {
    ShockRecord& rec = shocks[i];
    if (rec.from_merge()) {
      ShockRecord seeded = merge(gd, shocks[rec.parents[0]], shocks[rec.parents[1]], rec.t_birth, rec.id);
      rec.path.front() = seeded.path.front();
    }
    evolve_amplitude(gd, rec);
  }
  return gd;
}

DensitySlice::DensitySlice(const GeneralizedDensity& gd, double t)
    : gd_(gd), t_(t), curve_(slice_at(gd.fan(), t)) {
  ids_ = gd.active(t);
  for (int id : ids_) shocks_.push_back(gd.shock_at(id, t));
  const auto& g = gd.fan().x0_grid();
  double lo = g.front();
  double x_lo = curve_.at_x0(lo).x;
  for (const auto& s : shocks_) {
    pieces_.push_back({lo, s.x0_l, x_lo, curve_.at_x0(s.x0_l).x});
    lo = s.x0_r;
    x_lo = curve_.at_x0(s.x0_r).x;
  }
  pieces_.push_back({lo, g.back(), x_lo, curve_.at_x0(g.back()).x});
}

std::optional<DensityPoint> DensitySlice::on_piece(std::size_t k, double x) const {
  const Piece& pc = pieces_.at(k);
  auto s = curve_.invert_window(x, pc.x0_lo, pc.x0_hi);
  if (!s) {
    // Piece ends are shock anchors; rounding can put x just outside the image.
    const double slack = 1e-9 * (1.0 + std::fabs(x));
    if (std::fabs(x - pc.x_lo) <= slack) {
      s = curve_.at_x0(pc.x0_lo);
    } else if (std::fabs(x - pc.x_hi) <= slack) {
      s = curve_.at_x0(pc.x0_hi);
    } else {
      return std::nullopt;
    }
  }
  if (!(s->J > gd_.options().fold_tolerance)) {
    throw NumericalError(Failure::fold_contact,
                         fmt::format("J = {} at x = {}, t = {} on the regular set", s->J, x, t_));
  }
  DensityPoint d;
  d.x0 = s->x0;
  d.x = x;
  d.p = s->p;
  d.S = s->S;
  d.J = s->J;
  d.R = gd_.cauchy(s->x0, s->J, s->a_int);
  const auto der = gd_.symbol().derivatives(x, s->p, t_);
  d.u = der.Pp;
  d.a = gd_.a_field()(der, x, t_);
  d.piece = k;
  return d;
}

std::optional<DensityPoint> DensitySlice::at(double x) const {
  for (const auto& s : shocks_) {
    if (x == s.x) return std::nullopt;
  }
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (x >= pieces_[k].x_lo && x <= pieces_[k].x_hi) return on_piece(k, x);
  }
  return std::nullopt;
}

double DensitySlice::smooth_mass(double x_lo, double x_hi, double tol) const {
  // x = x(x0) on each piece turns R dx into rho0(x0) exp(-a_int) dx0, which
  // stays bounded where R blows up at a young fold.
  double total = 0.0;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const Piece& pc = pieces_[k];
    const double a = std::max(x_lo, pc.x_lo);
    const double b = std::min(x_hi, pc.x_hi);
    if (!(a < b)) continue;
    auto preimage = [&](double x, double end_x, double end_x0) {
      if (x == end_x) return end_x0;
      const auto s = curve_.invert_window(x, pc.x0_lo, pc.x0_hi);
      if (!s) throw NumericalError(Failure::uncovered, fmt::format("x = {} is not on piece {} at t = {}", x, k, t_));
      return s->x0;
    };
    const double x0_a = preimage(a, pc.x_lo, pc.x0_lo);
    const double x0_b = preimage(b, pc.x_hi, pc.x0_hi);
    auto density = [&](double x0) { return gd_.rho0()(x0) * std::exp(-curve_.at_x0(x0).a_int); };
    total += numerics::adaptive_simpson(density, x0_a, x0_b, tol);
  }
  return total;
}

double DensitySlice::singular_mass() const {
  double total = 0.0;
  for (const auto& s : shocks_) total += s.e;
  return total;
}

MassRecord masses(const GeneralizedDensity& gd, double t) {
  const DensitySlice sl = gd.slice(t);
  return {t, sl.smooth_mass(-kInf, kInf), sl.singular_mass()};
}

MadelungField madelung_assemble(const EssentialSolution& S, const GeneralizedDensity& gd, double h, double collar) {
  MadelungField out;
  out.t = S.t;
  out.h = h;
  out.x = S.x;
  out.value.assign(S.x.size(), std::numeric_limits<double>::quiet_NaN());
  out.masked.assign(S.x.size(), true);
  const DensitySlice sl = gd.slice(S.t);
  for (std::size_t i = 0; i < S.x.size(); ++i) {
    if (S.branch_id[i] < 0) continue;
    const double x = S.x[i];
    bool near = false;
    for (const auto& s : sl.shocks()) near = near || std::fabs(x - s.x) <= collar;
    if (near) continue;
    const auto d = sl.at(x);
    if (!d) continue;
    if (d->R < 0.0) throw NumericalError(Failure::domain, fmt::format("negative density {} at x = {}", d->R, x));
    out.value[i] = std::exp(-S.S[i] / h) * std::sqrt(d->R);
    out.masked[i] = false;
  }
  return out;
}

}  // namespace tunnelshock

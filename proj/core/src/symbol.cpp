#include "tunnelshock/symbol.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"

namespace tunnelshock {

namespace {

constexpr double kExponentGuard = 700.0;

inline double step1(double x) { return 1e-6 * (1.0 + std::fabs(x)); }
inline double step2(double x) { return 1e-4 * (1.0 + std::fabs(x)); }

double dx1(const Expression& e, double x, double t) {
  return e.uses(Variable::x) ? derivative_x(e, x, t, step1(x)) : 0.0;
}

double dx2(const Expression& e, double x, double t) {
  return e.uses(Variable::x) ? second_derivative_x(e, x, t, step2(x)) : 0.0;
}

}  // namespace

SymbolModel::SymbolModel(Expression A, Expression V, std::vector<Jump> jumps, bool time_dependent,
                         MomentumBox box)
    : A_(std::move(A)), V_(std::move(V)), jumps_(std::move(jumps)), time_dependent_(time_dependent), box_(box) {
  auto check_time = [&](const Expression& e, const char* name) {
    if (e.uses(Variable::t) && !time_dependent_) {
      throw ValidationError(fmt::format("symbol coefficient {} depends on t but the symbol is not time dependent", name));
    }
    if (e.uses(Variable::u)) throw ValidationError(fmt::format("symbol coefficient {} may not use u", name));
  };
  check_time(A_, "A");
  check_time(V_, "V");
  homogeneous_ = !A_.uses(Variable::x) && !V_.uses(Variable::x);
  for (const auto& j : jumps_) {
    check_time(j.rate, "lambda");
    homogeneous_ = homogeneous_ && !j.rate.uses(Variable::x);
  }
  if (!(box_.lo < box_.hi)) throw ValidationError("momentum box must satisfy lo < hi");
}

double SymbolModel::exp_guarded(double p, double nu) const {
  const double arg = p * nu;
  if (std::fabs(arg) > kExponentGuard) {
    throw NumericalError(Failure::range, fmt::format("|p*nu| = {} exceeds the exponent guard", std::fabs(arg)));
  }
  return std::exp(arg);
}

double SymbolModel::P(double x, double p, double t) const {
  double value = A_(x, t) * p * p + V_(x, t);
  for (const auto& j : jumps_) value += j.rate(x, t) * (exp_guarded(p, j.nu) - 1.0);
  return value;
}

double SymbolModel::dP_dp(double x, double p, double t) const {
  double value = 2.0 * A_(x, t) * p;
  for (const auto& j : jumps_) value += j.rate(x, t) * j.nu * exp_guarded(p, j.nu);
  return value;
}

double SymbolModel::dP_dx(double x, double p, double t) const {
  double value = dx1(A_, x, t) * p * p + dx1(V_, x, t);
  for (const auto& j : jumps_) value += dx1(j.rate, x, t) * (exp_guarded(p, j.nu) - 1.0);
  return value;
}

double SymbolModel::hess(double x, double p, double t) const {
  double value = 2.0 * A_(x, t);
  for (const auto& j : jumps_) value += j.rate(x, t) * j.nu * j.nu * exp_guarded(p, j.nu);
  return value;
}

double SymbolModel::d2P_dxdp(double x, double p, double t) const {
  double value = 2.0 * dx1(A_, x, t) * p;
  for (const auto& j : jumps_) value += dx1(j.rate, x, t) * j.nu * exp_guarded(p, j.nu);
  return value;
}

SymbolDerivatives SymbolModel::derivatives(double x, double p, double t) const {
  SymbolDerivatives d;
  const double a = A_(x, t);
  d.P = a * p * p + V_(x, t);
  d.Pp = 2.0 * a * p;
  d.Ppp = 2.0 * a;
  if (!homogeneous_) {
    const double a1 = dx1(A_, x, t);
    d.Px = a1 * p * p + dx1(V_, x, t);
    d.Pxp = 2.0 * a1 * p;
    d.Pxx = dx2(A_, x, t) * p * p + dx2(V_, x, t);
  }
  for (const auto& j : jumps_) {
    const double lam = j.rate(x, t);
    const double e = exp_guarded(p, j.nu);
    d.P += lam * (e - 1.0);
    d.Pp += lam * j.nu * e;
    d.Ppp += lam * j.nu * j.nu * e;
    if (j.rate.uses(Variable::x)) {
      const double l1 = dx1(j.rate, x, t);
      d.Px += l1 * (e - 1.0);
      d.Pxp += l1 * j.nu * e;
      d.Pxx += dx2(j.rate, x, t) * (e - 1.0);
    }
  }
  return d;
}

LegendrePair SymbolModel::legendre(double x, double v, double t) const {
  double lo = box_.lo;
  double hi = box_.hi;
  const double f_lo = dP_dp(x, lo, t) - v;
  const double f_hi = dP_dp(x, hi, t) - v;
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw NumericalError(Failure::no_root,
                         fmt::format("velocity {} outside dP/dp range [{}, {}] on the momentum box", v, f_lo + v, f_hi + v));
  }
  double p = std::fmin(std::fmax(0.0, lo), hi);
  for (int it = 0; it < 200; ++it) {
    const double f = dP_dp(x, p, t) - v;
    if (f == 0.0) break;
    if (f > 0.0) {
      hi = p;
    } else {
      lo = p;
    }
    const double fp = hess(x, p, t);
    double next = (fp > 0.0) ? p - f / fp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::fabs(next - p) <= 1e-15 * (1.0 + std::fabs(p)) || (hi - lo) <= 1e-15 * (1.0 + std::fabs(p));
    p = next;
    if (done) break;
  }
  return {p, v * p - P(x, p, t)};
}

void SymbolModel::validate(double x_lo, double x_hi, int samples) const {
  for (int i = 0; i < samples; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / std::max(1, samples - 1);
    if (A_(x, 0.0) < 0.0) throw ValidationError(fmt::format("diffusion coefficient A is negative at x = {}", x));
    for (const auto& j : jumps_) {
      if (j.rate(x, 0.0) < 0.0) throw ValidationError(fmt::format("jump rate is negative at x = {}", x));
    }
  }
}

}  // namespace tunnelshock

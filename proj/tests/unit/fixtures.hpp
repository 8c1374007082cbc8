#pragma once

#include <memory>
#include <string>

#include "tunnelshock/characteristics.hpp"
#include "tunnelshock/density.hpp"
#include "tunnelshock/expr.hpp"
#include "tunnelshock/symbol.hpp"

namespace fixtures {

using namespace tunnelshock;

inline Expression expr(const std::string& s) { return Expression::parse(s); }

/// P = p^2 / 2.
inline SymbolModel burgers() { return SymbolModel(Expression::constant(0.5), Expression::constant(0.0)); }

/// P = e^p - 1 (lambda = 1, nu = 1, no diffusion).
inline SymbolModel pure_jump() {
  return SymbolModel(Expression::constant(0.0), Expression::constant(0.0), {Jump{1.0, Expression::constant(1.0)}});
}

inline InitialAction action(const std::string& S0, const std::string& dS0, const std::string& d2S0) {
  return InitialAction{expr(S0), expr(dS0), expr(d2S0)};
}

/// u0 = -tanh x.
inline InitialAction tanh_data() { return action("log(sech(x))", "-tanh(x)", "-sech(x)^2"); }

/// Smoothed Riemann data u_l -> u_r across x = 0 with width w.
inline InitialAction riemann_data(double ul, double ur, double w = 0.05) {
  const double m = 0.5 * (ul + ur);
  const double d = 0.5 * (ul - ur);
  const auto num = [](double v) { return std::to_string(v); };
  return action(num(m) + "*x + " + num(d * w) + "*log(sech(x/" + num(w) + "))",
                num(m) + " - " + num(d) + "*tanh(x/" + num(w) + ")",
                "-" + num(d) + "*sech(x/" + num(w) + ")^2/" + num(w));
}

inline std::shared_ptr<const Fan> fan(const SymbolModel& m, const InitialAction& S0, double lo, double hi,
                                      std::size_t n, double T, double h_t = 0.01, const AField& a = {}) {
  FanOptions o;
  o.T = T;
  o.h_t = h_t;
  return std::make_shared<const Fan>(integrate_fan(m, S0, uniform_grid(lo, hi, n), o, a));
}

}  // namespace fixtures

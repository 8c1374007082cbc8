#pragma once

#include <vector>

#include "tunnelshock/expr.hpp"

namespace tunnelshock {

/// One jump channel: size nu (fixed) and intensity lambda(x) >= 0.
struct Jump {
  double nu = 0.0;
  Expression rate;
};

struct MomentumBox {
  double lo = -20.0;
  double hi = 20.0;
};

struct SymbolDerivatives {
  double P = 0.0;
  double Pp = 0.0;   // dP/dp
  double Px = 0.0;   // dP/dx
  double Ppp = 0.0;  // d2P/dp2
  double Pxp = 0.0;  // d2P/dxdp
  double Pxx = 0.0;  // d2P/dx2
};

struct LegendrePair {
  double p = 0.0;  // momentum with dP/dp(x, p) = v
  double L = 0.0;  // v*p - P(x, p)
};

/// Jump-diffusion symbol P(x,p) = A(x) p^2 + V(x) + sum_k lambda_k(x) (exp(p nu_k) - 1).
///
/// The jump exponent is real: this is the tunnel (non-oscillating) evaluation,
/// for which d2P/dp2 = 2A + sum lambda nu^2 exp(p nu) is positive as soon as
/// A > 0 or some lambda_k nu_k != 0.
///
/// p-derivatives are analytic. x-derivatives of the coefficient expressions
/// use central differences with step 1e-6 (1 + |x|) (1e-4 (1 + |x|) for the
/// second derivative). Coefficients that do not depend on x contribute
/// nothing to the x-derivatives, so spatially homogeneous symbols are exact.
class SymbolModel {
 public:
  SymbolModel(Expression A, Expression V, std::vector<Jump> jumps = {}, bool time_dependent = false,
              MomentumBox box = {});

  double P(double x, double p, double t = 0.0) const;
  double dP_dp(double x, double p, double t = 0.0) const;
  double dP_dx(double x, double p, double t = 0.0) const;
  /// d2P/dp2.
  double hess(double x, double p, double t = 0.0) const;
  double d2P_dxdp(double x, double p, double t = 0.0) const;

  /// All of the above plus d2P/dx2 in one pass.
  SymbolDerivatives derivatives(double x, double p, double t = 0.0) const;

  /// Inverts v = dP/dp(x, .) on the momentum box (safeguarded Newton) and
  /// returns the Lagrangian L = v p - P. Throws Failure::no_root when v lies
  /// outside dP/dp(box).
  LegendrePair legendre(double x, double v, double t = 0.0) const;

  /// Probes A >= 0 and lambda_k >= 0 on [x_lo, x_hi] at `samples` points.
  void validate(double x_lo, double x_hi, int samples = 201) const;

  bool homogeneous() const { return homogeneous_; }
  bool time_dependent() const { return time_dependent_; }
  const MomentumBox& box() const { return box_; }
  const Expression& A() const { return A_; }
  const Expression& V() const { return V_; }
  const std::vector<Jump>& jumps() const { return jumps_; }

 private:
  double exp_guarded(double p, double nu) const;

  Expression A_;
  Expression V_;
  std::vector<Jump> jumps_;
  bool time_dependent_ = false;
  bool homogeneous_ = true;
  MomentumBox box_;
};

}  // namespace tunnelshock

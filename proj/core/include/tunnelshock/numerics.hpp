#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tunnelshock::numerics {

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
double simpson(const std::function<double(double)>& f, double a, double b, int panels);

/// Weights of the composite Simpson rule on `panels` (even) uniform panels over [a, b].
double simpson_weight(int i, int panels, double a, double b);

/// Adaptive Simpson quadrature with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth = 40);

/// Bracketed root of f on [a, b] (TOMS 748). Throws Failure::no_root if f(a), f(b)
/// do not bracket a sign change.
double find_root(const std::function<double(double)>& f, double a, double b, double x_tol = 1e-14);

/// Minimises f on [a, b] (Brent). Returns the abscissa.
double minimize(const std::function<double(double)>& f, double a, double b);

/// Cubic Hermite on the unit interval: values y0, y1 and derivatives d0, d1
/// already scaled to the interval length.
struct Hermite {
  double y0, y1, d0, d1;
  double operator()(double s) const;
  double slope(double s) const;
};

/// Four-point Lagrange interpolation at x from nodes xs (size 4).
double lagrange4(std::span<const double, 4> xs, std::span<const double, 4> ys, double x);

/// First-derivative weights at z for the nodes xs (Fornberg's recursion).
std::vector<double> derivative_weights(double z, std::span<const double> xs);

/// Least-squares slope of y against x.
double fitted_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tunnelshock::numerics

#pragma once

#include <cstdint>
#include <vector>

#include "tunnelshock/density.hpp"
#include "tunnelshock/manifold.hpp"

namespace tunnelshock {

/// zeta = ((1 - s_x^2)(1 - s_t^2))^3 with s_x = (x - x_c) / r_x, s_t = (t - t_c) / r_t,
/// zero outside the unit box.
struct BumpTestFunction {
  double x_c = 0.0;
  double t_c = 1.0;
  double r_x = 0.5;
  double r_t = 0.5;

  double value(double x, double t) const;
  double dx(double x, double t) const;
  double dt(double x, double t) const;
  /// Integral of zeta over its support: r_x r_t (32/35)^2.
  double norm() const;
};

/// |int int R (zeta_t + u zeta_x - a zeta) dx dt + sum_i int e_i (zeta_t + c_i zeta_x - f(c_i) zeta) dt|
/// with composite Simpson on 2^level panels per sub-range. Time is split at
/// shock births and merges, space at shock positions. The f(c) term is used
/// only with an expression a-field and stratum_term set. Throws
/// Failure::support_clipping when the support leaves t > 0, t <= T or the
/// image of the fan.
double identity_residual(const GeneralizedDensity& gd, const BumpTestFunction& zeta, int level);

/// Bump whose t-range contains a focal birth gets rejected by the suite (the
/// amplitude is not smooth there).
bool contains_focal_birth(const GeneralizedDensity& gd, const BumpTestFunction& zeta);

struct IdentityEntry {
  std::size_t bump = 0;
  BumpTestFunction zeta;
  /// "shock", "merge" or "random".
  const char* kind = "random";
  std::vector<int> levels;
  std::vector<double> residuals;
  /// log2(residual(level) / residual(level + 1)); one fewer than levels.
  std::vector<double> orders;
};

/// Residuals below this are round-off; their orders carry no information.
inline constexpr double kRoundoffFloor = 1e-12;

struct IdentityReport {
  std::vector<IdentityEntry> entries;
  double max_residual(int level) const;
  /// Skips level pairs whose finer residual is at or below kRoundoffFloor.
  double min_order() const;
};

struct IdentityOptions {
  std::vector<int> levels{5, 6, 7};
  unsigned threads = 0;
};

/// `count` bumps placed by a seeded generator, plus one straddling each shock
/// and one centred on each merge point (these come first). Throws
/// ValidationError for count < 1.
IdentityReport identity_suite(const GeneralizedDensity& gd, int count, std::uint64_t seed,
                              const IdentityOptions& options = {});

/// max |S_t + P(x, S_x)| by central differences over a series of essential
/// solutions on one x grid at equally spaced times. Stencils touching NaN
/// values or a change of branch are skipped.
double hj_residual(const std::vector<EssentialSolution>& S, const SymbolModel& symbol);

}  // namespace tunnelshock

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nlsmix/errors.hpp"
#include "nlsmix/ode.hpp"
#include "nlsmix/radial.hpp"

namespace nlsmix {

/// sign(u) |u|^e with multiplication fast paths for small integer powers.
inline double signed_power(double u, double e) {
  const double au = std::abs(u);
  double v;
  if (e == 1.0) v = au;
  else if (e == 2.0) v = au * au;
  else if (e == 3.0) v = au * au * au;
  else if (e == 4.0) { const double s = au * au; v = s * s; }
  else if (e == 5.0) { const double s = au * au; v = s * s * au; }
  else if (e == 7.0) { const double s = au * au * au; v = s * s * au; }
  else v = std::pow(au, e);
  return u < 0 ? -v : v;
}

/// Right-hand side of the radial stationary problem
///   u'' + (N-1)/r u' = kappa2 u - |u|^{p-2}u - mu |u|^{q-2}u,
/// i.e. -Delta u = lambda u + |u|^{p-2}u + mu |u|^{q-2}u with lambda = -kappa2.
struct StationaryProblem {
  int dim = 1;
  double kappa2 = 1.0;
  double p = 4.0;
  double q = 3.0;
  double mu = 0.0;

  [[nodiscard]] double force(double u) const {
    double f = kappa2 * u - signed_power(u, p - 1.0);
    if (mu != 0.0) f -= mu * signed_power(u, q - 1.0);
    return f;
  }

  [[nodiscard]] double force_slope(double u) const {
    const double au = std::abs(u);
    double d = kappa2 - (p - 1.0) * std::pow(au, p - 2.0);
    if (mu != 0.0) d -= mu * (q - 1.0) * std::pow(au, q - 2.0);
    return d;
  }

  /// Decaying solution K of the linearisation at u = 0 and its derivative,
  /// used to continue a profile past the point where shooting loses accuracy.
  [[nodiscard]] std::pair<double, double> linear_tail(double r) const {
    const double k = std::sqrt(kappa2);
    switch (dim) {
      case 1: { const double e = std::exp(-k * r); return {e, -k * e}; }
      case 2: return {std::cyl_bessel_k(0.0, k * r), -k * std::cyl_bessel_k(1.0, k * r)};
      default: { const double e = std::exp(-k * r) / r; return {e, -e * (k + 1.0 / r)}; }
    }
  }
};

enum class ShotOutcome { overshoot, undershoot, undecided };

struct Shot {
  ShotOutcome outcome = ShotOutcome::undecided;
  std::size_t last = 0;  ///< last node reached before the event
  std::vector<double> u;
  std::vector<double> v;
};

/// Integrates from the centre with initial height u0 until the trajectory
/// crosses zero (overshoot), turns upward (undershoot) or leaves the grid.
/// The regular singular point is passed with the local series
/// u = u0 + c2 r^2 + c4 r^4.
inline Shot shoot_once(const StationaryProblem& prob, const RadialGrid& grid, double u0, bool record) {
  const double h = grid.step();
  const int n = prob.dim;
  const double f0 = prob.force(u0);
  const double c2 = f0 / (2.0 * n);
  const double c4 = prob.force_slope(u0) * c2 / (4.0 * (n + 2));
  auto rhs = [&prob, n](double r, const ode::State<2>& y) -> ode::State<2> {
    return {y[1], prob.force(y[0]) - (n - 1) * y[1] / r};
  };
  Shot shot;
  if (record) {
    shot.u.assign(grid.points, 0.0);
    shot.v.assign(grid.points, 0.0);
    shot.u[0] = u0;
  }
  ode::State<2> y{u0 + c2 * h * h + c4 * h * h * h * h, 2.0 * c2 * h + 4.0 * c4 * h * h * h};
  double step = h;
  ode::Tolerance tol;
  for (std::size_t j = 1;; ++j) {
    if (record) {
      shot.u[j] = y[0];
      shot.v[j] = y[1];
    }
    shot.last = j;
    if (y[0] < 0.0) { shot.outcome = ShotOutcome::overshoot; break; }
    if (y[1] > 0.0 || y[0] > 2.0 * u0) { shot.outcome = ShotOutcome::undershoot; break; }
    if (j + 1 >= grid.points) { shot.outcome = ShotOutcome::undecided; break; }
    y = ode::advance<2>(rhs, grid.r(j), y, grid.r(j + 1), step, tol);
  }
  return shot;
}

struct ShootingReport {
  double center = 0;          ///< u(0)
  double bracket_lo = 0;
  double bracket_hi = 0;
  std::size_t iterations = 0;
  double matching_radius = 0; ///< where the linear tail takes over
  double residual = 0;        ///< relative weighted-L2 ODE residual
};

/// Relative weighted-L2 residual of u'' + (N-1)/r u' - F(u), with u'' from
/// fourth-order differences of the stored slope.
inline double ode_residual(const StationaryProblem& prob, const RadialField& field) {
  const std::size_t n = field.size();
  const double h = field.grid.step();
  const auto& u = field.values;
  const auto v = field.derivative();
  std::vector<double> res(n, 0.0), ref(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double fu = prob.force(u[j]);
    ref[j] = fu * fu;
    if (j < 2 || j + 2 >= n) continue;
    const double d2 = (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / (12.0 * h);
    const double r = field.grid.r(j);
    const double e = d2 + (prob.dim - 1) * v[j] / r - fu;
    res[j] = e * e;
  }
  const double num = field.integral(res);
  const double den = field.integral(ref);
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Positive radially decreasing solution of the stationary problem found by
/// bisection on the central height between undershooting and overshooting
/// trajectories.
inline RadialField shoot_ground_state(const StationaryProblem& prob, const RadialGrid& grid,
                                      ShootingReport* report = nullptr) {
  grid.validate();
  if (!(prob.kappa2 > 0)) fail(ErrorCategory::validation, "shooting requires lambda < 0");
  // positive zero of F bounds the undershooting heights from above
  double z_lo = 0.0, z_hi = 1.0;
  while (prob.force(z_hi) > 0.0) {
    z_lo = z_hi;
    z_hi *= 2.0;
    if (z_hi > 1e300) fail(ErrorCategory::shooting, "force has no positive zero");
  }
  if (z_lo == 0.0) {
    z_lo = z_hi;
    while (prob.force(z_lo) <= 0.0) {
      z_lo *= 0.5;
      if (z_lo < 1e-300) fail(ErrorCategory::shooting, "force has no positive zero near the origin");
    }
  }
  for (int i = 0; i < 200 && z_hi - z_lo > 4 * std::numeric_limits<double>::epsilon() * z_hi; ++i) {
    const double m = 0.5 * (z_lo + z_hi);
    (prob.force(m) > 0.0 ? z_lo : z_hi) = m;
  }
  double lo = z_lo;
  double hi = 2.0 * z_hi;
  int doublings = 0;
  while (shoot_once(prob, grid, hi, false).outcome != ShotOutcome::overshoot) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60)
      fail(ErrorCategory::shooting, "no overshooting height found; last bracket [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
  }
  std::size_t iterations = 0;
  while (hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi && iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const auto out = shoot_once(prob, grid, mid, false).outcome;
    if (out == ShotOutcome::overshoot) hi = mid;
    else if (out == ShotOutcome::undershoot) lo = mid;
    else { lo = hi = mid; break; }
    ++iterations;
  }

  const Shot a = shoot_once(prob, grid, lo, true);
  const Shot b = shoot_once(prob, grid, hi, true);
  const std::size_t end = std::min(a.last, b.last);
  const double u0 = 0.5 * (lo + hi);
  // largest prefix on which both bracketing trajectories agree and decrease
  std::size_t m = 0;
  for (std::size_t j = 1; j <= end; ++j) {
    const double ua = a.u[j], ub = b.u[j];
    if (ua <= 0 || ub <= 0 || a.v[j] >= 0 || b.v[j] >= 0) break;
    if (std::abs(ua - ub) > 1e-3 * std::min(ua, ub)) break;
    m = j;
  }
  const bool reached_end = (a.outcome == ShotOutcome::undecided && b.outcome == ShotOutcome::undecided);
  if (m < 2 && !reached_end)
    fail(ErrorCategory::shooting, "bracketing trajectories diverge immediately; bracket [" + std::to_string(lo) +
                                      ", " + std::to_string(hi) + "]");

  RadialField field;
  field.grid = grid;
  field.values.assign(grid.points, 0.0);
  field.slope.assign(grid.points, 0.0);
  field.values[0] = u0;
  for (std::size_t j = 1; j <= m; ++j) {
    field.values[j] = 0.5 * (a.u[j] + b.u[j]);
    field.slope[j] = 0.5 * (a.v[j] + b.v[j]);
  }
  if (m + 1 < grid.points) {
    const double rm = grid.r(m);
    const auto [km, dkm] = prob.linear_tail(rm);
    const double scale = field.values[m] / km;
    for (std::size_t j = m + 1; j < grid.points; ++j) {
      const auto [k, dk] = prob.linear_tail(grid.r(j));
      field.values[j] = scale * k;
      field.slope[j] = scale * dk;
    }
  }
  if (report) {
    report->center = u0;
    report->bracket_lo = lo;
    report->bracket_hi = hi;
    report->iterations = iterations;
    report->matching_radius = grid.r(m);
    report->residual = ode_residual(prob, field);
  }
  return field;
}

}  // namespace nlsmix

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "nlsmix/errors.hpp"

namespace nlsmix {

/// Area of the unit sphere S^{N-1}; for N = 1 it counts the two half-lines.
inline double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: fail(ErrorCategory::validation, "unsupported dimension");
  }
}

/// Uniform radial nodes r_j = j * h, j = 0 .. points-1, h = radius / (points-1).
struct RadialGrid {
  int dim = 1;
  double radius = 40.0;
  std::size_t points = 16384;

  [[nodiscard]] double step() const { return radius / static_cast<double>(points - 1); }
  [[nodiscard]] double r(std::size_t j) const { return static_cast<double>(j) * step(); }

  void validate() const {
    if (dim < 1 || dim > 3) fail(ErrorCategory::validation, "radial grid dimension must be 1..3");
    if (points < 16) fail(ErrorCategory::validation, "radial grid needs at least 16 points");
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorCategory::validation, "radial grid radius must be positive");
  }
};

/// Integral over R^N of a radial function sampled on the grid. Trapezoid rule
/// with weight |S^{N-1}| r^{N-1}; for N >= 2 the leading Euler-Maclaurin term
/// at the origin is added (the integrand r^{N-1} f has a nonzero odd
/// derivative there), which keeps the rule O(h^4) for even profiles.
inline double integrate_radial(const RadialGrid& grid, std::span<const double> f) {
  const double h = grid.step();
  const std::size_t n = f.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    sum += w * std::pow(grid.r(j), grid.dim - 1) * f[j];
  }
  sum *= h;
  if (grid.dim == 2) sum += h * h / 12.0 * f[0];
  if (grid.dim == 3) sum -= std::pow(h, 4) / 120.0 * f[0];
  return sphere_area(grid.dim) * sum;
}

/// Real radial profile u(|x|) with an optional exact derivative u'(r)
/// (shooting solutions carry it; otherwise it is obtained by finite differences).
struct RadialField {
  RadialGrid grid;
  std::vector<double> values;
  std::vector<double> slope;

  [[nodiscard]] std::size_t size() const { return values.size(); }

  /// u'(r_j): stored slope when present, else fourth-order central differences
  /// with even reflection at the origin.
  [[nodiscard]] std::vector<double> derivative() const {
    if (slope.size() == values.size()) return slope;
    const std::size_t n = values.size();
    const double h = grid.step();
    std::vector<double> d(n, 0.0);
    auto at = [&](std::ptrdiff_t j) -> double {
      if (j < 0) return values[static_cast<std::size_t>(-j)];
      if (j >= static_cast<std::ptrdiff_t>(n)) return 0.0;
      return values[static_cast<std::size_t>(j)];
    };
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = static_cast<std::ptrdiff_t>(j);
      if (j + 2 < n || j == 0) {
        d[j] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
      } else {
        d[j] = (values[j] - values[j - 1]) / h;
      }
    }
    d[0] = 0.0;
    return d;
  }

  [[nodiscard]] double integral(std::span<const double> f) const { return integrate_radial(grid, f); }

  [[nodiscard]] double mass2() const {
    std::vector<double> f(values.size());
    std::transform(values.begin(), values.end(), f.begin(), [](double u) { return u * u; });
    return integral(f);
  }

  [[nodiscard]] double grad2() const {
    auto f = derivative();
    for (auto& v : f) v *= v;
    return integral(f);
  }

  /// Integral of |u|^s.
  [[nodiscard]] double power_integral(double s) const {
    std::vector<double> f(values.size());
    std::transform(values.begin(), values.end(), f.begin(), [s](double u) { return std::pow(std::abs(u), s); });
    return integral(f);
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double u : values) m = std::max(m, std::abs(u));
    return m;
  }
};

/// Cubic B-spline interpolant of a radial profile; zero beyond the grid.
class RadialInterpolant {
 public:
  explicit RadialInterpolant(const RadialField& field)
      : radius_(field.grid.radius),
        values_(field.values),
        slope_(field.derivative()),
        spline_(field.values.begin(), field.values.end(), 0.0, field.grid.step(), 0.0, slope_.back()),
        dspline_(slope_.begin(), slope_.end(), 0.0, field.grid.step()) {}

  [[nodiscard]] double operator()(double r) const {
    r = std::abs(r);
    return r > radius_ ? 0.0 : spline_(r);
  }

  [[nodiscard]] double slope(double r) const {
    const double sign = r < 0 ? -1.0 : 1.0;
    r = std::abs(r);
    return r > radius_ ? 0.0 : sign * dspline_(r);
  }

 private:
  double radius_;
  std::vector<double> values_;
  std::vector<double> slope_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> dspline_;
};

/// Resamples a profile onto another grid (same dimension) by spline interpolation.
inline RadialField resample(const RadialField& field, const RadialGrid& target) {
  RadialInterpolant interp(field);
  RadialField out;
  out.grid = target;
  out.values.resize(target.points);
  out.slope.resize(target.points);
  for (std::size_t j = 0; j < target.points; ++j) {
    out.values[j] = interp(target.r(j));
    out.slope[j] = interp.slope(target.r(j));
  }
  return out;
}

/// ||u - v||_{L2} and ||u - v||_{H1} for profiles on a common grid.
struct ProfileDistance {
  double l2 = 0;
  double h1 = 0;
};

inline ProfileDistance profile_distance(const RadialField& u, const RadialField& v) {
  if (u.size() != v.size()) fail(ErrorCategory::validation, "profile distance needs a common grid");
  const auto du = u.derivative();
  const auto dv = v.derivative();
  std::vector<double> f(u.size()), g(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    f[j] = (u.values[j] - v.values[j]) * (u.values[j] - v.values[j]);
    g[j] = (du[j] - dv[j]) * (du[j] - dv[j]);
  }
  const double l2 = u.integral(f);
  const double d2 = u.integral(g);
  return {std::sqrt(std::max(0.0, l2)), std::sqrt(std::max(0.0, l2 + d2))};
}

}  // namespace nlsmix

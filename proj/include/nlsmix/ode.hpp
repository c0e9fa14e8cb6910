#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "nlsmix/errors.hpp"

namespace nlsmix::ode {

template <std::size_t M>
using State = std::array<double, M>;

struct Tolerance {
  double rtol = 1e-12;
  double atol = 1e-15;
  double min_step = 1e-14;
  std::size_t max_substeps = 100000;
};

/// Dormand-Prince 5(4) embedded pair. Advances y from t0 to t1 exactly,
/// subdividing as the local error estimate demands. `step` carries the
/// suggested step size between calls.
template <std::size_t M, class Rhs>
State<M> advance(const Rhs& f, double t0, State<M> y, double t1, double& step, const Tolerance& tol = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // difference between 5th and embedded 4th order weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  double t = t0;
  const double span = t1 - t0;
  if (span <= 0) return y;
  double h = (step > 0) ? std::min(step, span) : span;
  std::size_t substeps = 0;
  State<M> k1 = f(t, y), k2, k3, k4, k5, k6, k7, tmp, y5;
  while (t < t1) {
    if (++substeps > tol.max_substeps) fail(ErrorCategory::solver, "ODE integrator exceeded substep budget");
    bool last = false;
    if (t + h >= t1 || (t1 - (t + h)) < 1e-9 * h) {
      h = t1 - t;
      last = true;
    }
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    k2 = f(t + c2 * h, tmp);
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * h, tmp);
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * h, tmp);
    for (std::size_t i = 0; i < M; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * h, tmp);
    for (std::size_t i = 0; i < M; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(t + h, tmp);
    for (std::size_t i = 0; i < M; ++i)
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = f(t + h, y5);
    double err = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (err <= 1.0) {
      t = last ? t1 : t + h;
      y = y5;
      k1 = k7;
      const double grow = err < 1e-10 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      if (!last) h *= grow;
      else step = h * grow;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
      if (h < tol.min_step * std::max(1.0, std::abs(t))) fail(ErrorCategory::solver, "ODE step size underflow");
    }
  }
  return y;
}

}  // namespace nlsmix::ode

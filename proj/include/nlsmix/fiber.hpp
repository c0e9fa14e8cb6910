#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlsmix/errors.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"

namespace nlsmix {

/// The integrals through which E, P and the fiber map depend on u.
struct FiberTriple {
  double grad2 = 0;  ///< |grad u|_2^2
  double mq = 0;     ///< |u|_q^q
  double mp = 0;     ///< |u|_p^p
  double mass2 = 0;  ///< |u|_2^2
};

inline FiberTriple triple_of(const RadialField& field, const ModelParams& params) {
  return {field.grad2(), field.power_integral(params.q), field.power_integral(params.p), field.mass2()};
}

/// Triple of s * u, (s * u)(x) = e^{Ns/2} u(e^s x).
inline FiberTriple scale(const FiberTriple& tr, double s, const ModelParams& params) {
  const double gq_q = gamma_of(params.dim, params.q) * params.q;
  const double gp_p = gamma_of(params.dim, params.p) * params.p;
  return {std::exp(2.0 * s) * tr.grad2, std::exp(gq_q * s) * tr.mq, std::exp(gp_p * s) * tr.mp, tr.mass2};
}

inline double energy(const FiberTriple& tr, const ModelParams& params) {
  return 0.5 * tr.grad2 - tr.mp / params.p - params.mu * tr.mq / params.q;
}

inline double pohozaev(const FiberTriple& tr, const ModelParams& params) {
  return tr.grad2 - gamma_of(params.dim, params.p) * tr.mp - params.mu * gamma_of(params.dim, params.q) * tr.mq;
}

/// Psi(s) = E(s * u).
inline double psi(const FiberTriple& tr, double s, const ModelParams& params) {
  return energy(scale(tr, s, params), params);
}

/// Psi'(s) = P(s * u).
inline double psi_prime(const FiberTriple& tr, double s, const ModelParams& params) {
  return pohozaev(scale(tr, s, params), params);
}

inline double psi_second(const FiberTriple& tr, double s, const ModelParams& params) {
  const double gq = gamma_of(params.dim, params.q), gp = gamma_of(params.dim, params.p);
  const double q = params.q, p = params.p;
  const auto t = scale(tr, s, params);
  return 2.0 * t.grad2 - gp * gp * p * t.mp - params.mu * gq * gq * q * t.mq;
}

/// Lagrange multiplier of a stationary state read off the triple:
/// lambda a^2 = |grad u|^2 - |u|_p^p - mu |u|_q^q.
inline double rayleigh_lambda(const FiberTriple& tr, const ModelParams& params) {
  return (tr.grad2 - tr.mp - params.mu * tr.mq) / tr.mass2;
}

/// |P| below this counts as lying on the Pohozaev set.
inline double pohozaev_tolerance(const FiberTriple& tr) { return 1e-8 * (1.0 + tr.grad2); }

enum class PohozaevClass { Pplus, Pzero, Pminus, NotOnP };

constexpr std::string_view to_string(PohozaevClass c) {
  switch (c) {
    case PohozaevClass::Pplus: return "Pplus";
    case PohozaevClass::Pzero: return "Pzero";
    case PohozaevClass::Pminus: return "Pminus";
    case PohozaevClass::NotOnP: return "NotOnP";
  }
  return "?";
}

/// Sign of Psi''(0); meaningful for states on (or numerically next to) the Pohozaev set.
inline PohozaevClass curvature_class(const FiberTriple& tr, const ModelParams& params) {
  const double d2 = psi_second(tr, 0.0, params);
  // relative to the size of the terms; tiny states near lambda = 0 are still Pplus
  const double tol = 1e-8 * (tr.grad2 + tr.mp + std::abs(params.mu) * tr.mq);
  if (d2 > tol) return PohozaevClass::Pplus;
  if (d2 < -tol) return PohozaevClass::Pminus;
  return PohozaevClass::Pzero;
}

inline PohozaevClass classify_on_pohozaev(const FiberTriple& tr, const ModelParams& params) {
  if (std::abs(pohozaev(tr, params)) >= pohozaev_tolerance(tr)) return PohozaevClass::NotOnP;
  return curvature_class(tr, params);
}

struct FiberCriticalPoints {
  std::optional<double> s_u;  ///< local minimum (mixed focusing)
  std::optional<double> t_u;  ///< global maximum
  std::optional<double> c_u;  ///< zeros of Psi (mixed focusing)
  std::optional<double> d_u;
  PohozaevClass class_at_zero = PohozaevClass::NotOnP;
  std::vector<double> minima;  ///< every strict local minimum found
  std::vector<double> maxima;
};

namespace detail {

/// Zeros on [-60, 60] of D(s) = c0 - c1 e^{k1 s} - c2 e^{k2 s}. Terms with
/// k = 0 are folded into the constant and single-term equations are solved in
/// closed form; otherwise D has at most one interior extremum, whose location is
/// known explicitly, and the zeros are bracketed around it.
inline std::vector<double> two_exponential_zeros(double c0, double c1, double k1, double c2, double k2) {
  constexpr double lo = -60.0, hi = 60.0;
  struct Term { double c, k; };
  std::vector<Term> terms;
  for (Term t : {Term{c1, k1}, Term{c2, k2}}) {
    if (t.c == 0.0) continue;
    if (std::abs(t.k) < 1e-14) c0 -= t.c;
    else terms.push_back(t);
  }
  std::vector<double> zeros;
  if (terms.empty()) return zeros;
  if (terms.size() == 1) {
    const double ratio = c0 / terms[0].c;
    if (ratio > 0.0) {
      const double s = std::log(ratio) / terms[0].k;
      if (s >= lo && s <= hi) zeros.push_back(s);
    }
    return zeros;
  }
  auto D = [&](double s) { return c0 - terms[0].c * std::exp(terms[0].k * s) - terms[1].c * std::exp(terms[1].k * s); };
  std::vector<double> knots{lo, hi};
  // D'(s) = 0  <=>  e^{(k2-k1) s} = -c1 k1 / (c2 k2)
  const double ratio = -terms[0].c * terms[0].k / (terms[1].c * terms[1].k);
  if (ratio > 0.0 && terms[1].k != terms[0].k) {
    const double s = std::log(ratio) / (terms[1].k - terms[0].k);
    if (s > lo && s < hi) knots.push_back(s);
  }
  std::sort(knots.begin(), knots.end());
  for (std::size_t i = 1; i < knots.size(); ++i) {
    double a = knots[i - 1], b = knots[i];
    const double fa = D(a), fb = D(b);
    if (fa == 0.0) { zeros.push_back(a); continue; }
    if ((fa > 0.0) == (fb > 0.0) || fb == 0.0) continue;
    const bool rising = fb > 0.0;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      ((D(m) > 0.0) == rising ? b : a) = m;
    }
    zeros.push_back(0.5 * (a + b));
  }
  if (D(hi) == 0.0) zeros.push_back(hi);
  return zeros;
}

}  // namespace detail

/// Critical points and zeros of the fiber map s -> E(s * u).
inline FiberCriticalPoints fiber_critical_points(const FiberTriple& tr, const ModelParams& params) {
  params.validate();
  if (!(tr.grad2 > 0.0)) fail(ErrorCategory::structure, "fiber map of a triple with zero gradient is degenerate");
  const double gq = gamma_of(params.dim, params.q), gp = gamma_of(params.dim, params.p);
  const double q = params.q, p = params.p, mu = params.mu;
  const double kq = gq * q - 2.0, kp = gp * p - 2.0;

  FiberCriticalPoints out;
  // Psi'(s) e^{-2s} and 2 Psi(s) e^{-2s} both have the form c0 - c1 e^{kq s} - c2 e^{kp s}
  const auto crit = detail::two_exponential_zeros(tr.grad2, mu * gq * tr.mq, kq, gp * tr.mp, kp);
  for (double s : crit) {
    const double d2 = psi_second(tr, s, params);
    if (d2 > 0.0) out.minima.push_back(s);
    else if (d2 < 0.0) out.maxima.push_back(s);
  }
  if (!out.minima.empty()) out.s_u = out.minima.front();
  if (!out.maxima.empty()) out.t_u = out.maxima.back();

  const auto regime = classify(params);
  if (regime.tag == RegimeTag::mixed_focusing) {
    const auto zeros = detail::two_exponential_zeros(tr.grad2, 2.0 * mu * tr.mq / q, kq, 2.0 * tr.mp / p, kp);
    if (out.minima.size() != 1 || out.maxima.size() != 1 || zeros.size() != 2)
      fail(ErrorCategory::structure,
           "fiber map lacks the local-minimum/maximum pair expected in the mixed regime (" +
               std::to_string(crit.size()) + " critical points, " + std::to_string(zeros.size()) +
               " zeros); the mixed condition probably fails for this mass");
    out.c_u = zeros[0];
    out.d_u = zeros[1];
  } else if (crit.empty()) {
    fail(ErrorCategory::structure, "no critical point of the fiber map in s in [-60, 60]");
  }
  out.class_at_zero = classify_on_pohozaev(tr, params);
  return out;
}

/// Psi sampled on a uniform s grid, for plotting.
struct PsiSample {
  double s, psi, dpsi;
};

inline std::vector<PsiSample> sample_psi(const FiberTriple& tr, const ModelParams& params, double s0, double s1,
                                         std::size_t n) {
  std::vector<PsiSample> out;
  if (n == 0) return out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n == 1 ? s0 : s0 + (s1 - s0) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back({s, psi(tr, s, params), psi_prime(tr, s, params)});
  }
  return out;
}

/// Whether a triple is compatible with the GN inequalities (slack 1e-6).
inline bool gn_compatible(const FiberTriple& tr, const ModelParams& params, const GNConstants& gn_q,
                          const GNConstants& gn_p) {
  auto bound = [&](double s, const GNConstants& gn) {
    const double g = gamma_of(params.dim, s);
    return (1.0 + 1e-6) * gn.c_pow() * std::pow(tr.mass2, s * (1.0 - g) / 2.0) * std::pow(tr.grad2, s * g / 2.0);
  };
  return tr.mq <= bound(params.q, gn_q) && tr.mp <= bound(params.p, gn_p);
}

}  // namespace nlsmix

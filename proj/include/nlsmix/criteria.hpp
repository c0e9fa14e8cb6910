#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "nlsmix/errors.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/params.hpp"

namespace nlsmix {

/// Relative distance below which lhs and rhs of a condition (or the two
/// roots of h) are treated as coincident.
inline constexpr double kBoundaryTolerance = 1e-9;

struct ThresholdReport {
  std::string name;
  bool condition_holds = false;
  bool boundary = false;  ///< lhs == rhs within kBoundaryTolerance; margin forced to 0
  double lhs = 0;
  double rhs = 0;
  double margin = 0;      ///< rhs - lhs
  Regime regime;
};

struct HGeometry {
  double r0 = 0;
  double r1 = 0;
  double tbar = 0;
  double hmax = 0;
  double local_min_level = 0;
  // logarithms kept separately: r0 underflows long before log r0 does when q is close to pbar
  double log_r0 = 0;
  double log_r1 = 0;
  double log_tbar = 0;
};

struct GBound {
  double r2 = 0;
  double r3 = 0;
  double m_bound = 0;
};

namespace detail {

inline ThresholdReport finish_report(std::string name, double lhs, double rhs, const Regime& regime) {
  ThresholdReport rep;
  rep.name = std::move(name);
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.regime = regime;
  if (std::abs(rhs - lhs) <= kBoundaryTolerance * std::max(std::abs(lhs), std::abs(rhs))) {
    rep.boundary = true;
    rep.margin = 0.0;
    rep.condition_holds = false;
  } else {
    rep.margin = rhs - lhs;
    rep.condition_holds = lhs < rhs;
  }
  return rep;
}

/// Coefficients of t^2/2 - A t^{gq q} - B t^{gp p} for given (a, mu).
struct HCoefficients {
  double gq_q = 0;  // gamma_q q
  double gp_p = 0;  // gamma_p p
  double A = 0;
  double B = 0;
};

inline HCoefficients h_coefficients(const ModelParams& params, double cq_pow, double cp_pow) {
  const auto d = derive(params);
  const double q = params.q, p = params.p;
  HCoefficients c;
  c.gq_q = d.gamma_q * q;
  c.gp_p = d.gamma_p * p;
  c.A = params.mu * cq_pow * std::pow(params.a, (1.0 - d.gamma_q) * q) / q;
  c.B = cp_pow * std::pow(params.a, (1.0 - d.gamma_p) * p) / p;
  return c;
}

/// Roots in x = log t of F, where F increases on (-inf, xpeak) and decreases
/// on (xpeak, inf). The sign-change scan runs on a 512-point log grid over
/// [1e-8, 1e8] (with xpeak inserted); when a root lies outside that window
/// the window is widened geometrically in x.
inline std::vector<double> unimodal_roots_log(const std::function<double(double)>& F, double xpeak) {
  std::vector<double> roots;
  if (!(F(xpeak) > 0.0)) return roots;
  double xlo = std::log(1e-8), xhi = std::log(1e8);
  xlo = std::min(xlo, xpeak - 1.0);
  xhi = std::max(xhi, xpeak + 1.0);
  for (int i = 0; F(xlo) > 0.0; ++i) {
    xlo = xpeak - 2.0 * (xpeak - xlo);
    if (i > 60) fail(ErrorCategory::solver, "lower root of threshold function not bracketed");
  }
  for (int i = 0; F(xhi) > 0.0; ++i) {
    xhi = xpeak + 2.0 * (xhi - xpeak);
    if (i > 60) fail(ErrorCategory::solver, "upper root of threshold function not bracketed");
  }
  constexpr int kScan = 512;
  std::vector<double> xs;
  xs.reserve(kScan + 1);
  for (int i = 0; i < kScan; ++i) xs.push_back(xlo + (xhi - xlo) * i / (kScan - 1));
  xs.push_back(xpeak);
  std::sort(xs.begin(), xs.end());
  double fprev = F(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double fi = F(xs[i]);
    if ((fprev > 0.0) != (fi > 0.0)) {
      double a = xs[i - 1], b = xs[i];
      const bool rising = fi > 0.0;
      // bisection until the bracket in t is relatively 1e-12 (or x stops moving)
      for (int it = 0; it < 400 && b - a > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        ((F(m) > 0.0) == rising ? b : a) = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    fprev = fi;
  }
  return roots;
}

inline void require_ordering(const ModelParams& params, std::initializer_list<ExponentOrdering> allowed,
                             const char* what) {
  const auto o = ordering_of(params);
  for (auto a : allowed)
    if (a == o) return;
  fail(ErrorCategory::regime, std::string(what) + " is not defined for exponent ordering " + std::string(to_string(o)));
}

}  // namespace detail

/// h(t) = t^2/2 - mu C_q^q/q a^{(1-gq)q} t^{gq q} - C_p^p/p a^{(1-gp)p} t^{gp p}.
inline double h_eval(double t, const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  const auto c = detail::h_coefficients(params, gn_q.c_pow(), gn_p.c_pow());
  return 0.5 * t * t - c.A * std::pow(t, c.gq_q) - c.B * std::pow(t, c.gp_p);
}

/// phi(t) = t^{2-gq q}/2 - C_p^p/p a^{(1-gp)p} t^{gp p - gq q}; h = t^{gq q} (phi - A).
inline double phi_eval(double t, const ModelParams& params, const GNConstants& gn_p) {
  const auto d = derive(params);
  const double gq_q = d.gamma_q * params.q, gp_p = d.gamma_p * params.p;
  const double B = gn_p.c_pow() * std::pow(params.a, (1.0 - d.gamma_p) * params.p) / params.p;
  return 0.5 * std::pow(t, 2.0 - gq_q) - B * std::pow(t, gp_p - gq_q);
}

/// Maximiser of phi in log form.
inline double log_tbar(const ModelParams& params, double cp_pow) {
  const auto c = detail::h_coefficients(params, 1.0, cp_pow);
  return std::log((2.0 - c.gq_q) / (2.0 * c.B * (c.gp_p - c.gq_q))) / (c.gp_p - 2.0);
}

/// Geometry of h for q < pbar < p, mu > 0. Absent when h never becomes positive.
inline std::optional<HGeometry> h_roots(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  detail::require_ordering(params, {ExponentOrdering::mixed}, "h_roots");
  if (!(params.mu > 0.0)) fail(ErrorCategory::regime, "h_roots requires mu > 0");
  const auto c = detail::h_coefficients(params, gn_q.c_pow(), gn_p.c_pow());
  const double d1 = 2.0 - c.gq_q, d2 = c.gp_p - c.gq_q;
  auto F = [&](double x) { return 0.5 * std::exp(d1 * x) - c.B * std::exp(d2 * x) - c.A; };
  const double xbar = log_tbar(params, gn_p.c_pow());
  const double peak = F(xbar);
  if (std::abs(peak) <= kBoundaryTolerance * c.A) return std::nullopt;  // tangency
  const auto roots = detail::unimodal_roots_log(F, xbar);
  if (roots.size() != 2) return std::nullopt;

  HGeometry g;
  g.log_r0 = roots[0];
  g.log_r1 = roots[1];
  g.log_tbar = xbar;
  g.r0 = std::exp(roots[0]);
  g.r1 = std::exp(roots[1]);
  g.tbar = std::exp(xbar);
  auto h = [&](double x) {
    const double t = std::exp(x);
    return 0.5 * t * t - c.A * std::pow(t, c.gq_q) - c.B * std::pow(t, c.gp_p);
  };
  constexpr int bits = std::numeric_limits<double>::digits / 2;
  const auto mx = boost::math::tools::brent_find_minima([&](double x) { return -h(x); }, g.log_r0, g.log_r1, bits);
  g.hmax = -mx.second;
  // the local minimum sits in (0, r0); h(e^x) is unimodal there in x
  double xl = g.log_r0 - 1.0;
  while (h(xl) < h(xl + 0.5) && xl > g.log_r0 - 1e6) xl = g.log_r0 - 2.0 * (g.log_r0 - xl);
  const auto mn = boost::math::tools::brent_find_minima(h, xl, g.log_r0, bits);
  g.local_min_level = mn.second;
  return g;
}

/// Largest mu for which the mixed condition holds at the given mass (closed form).
inline double mu_star(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p);

/// q < pbar < p: (mu a^{(1-gq)q})^{gp p-2} (a^{(1-gp)p})^{2-gq q} < rhs.
inline double mixed_rhs(int dim, double q, double p, double cq_pow, double cp_pow) {
  const double gq_q = gamma_of(dim, q) * q, gp_p = gamma_of(dim, p) * p;
  const double f1 = p * (2.0 - gq_q) / (2.0 * cp_pow * (gp_p - gq_q));
  const double f2 = q * (gp_p - 2.0) / (2.0 * cq_pow * (gp_p - gq_q));
  return std::pow(f1, 2.0 - gq_q) * std::pow(f2, gp_p - 2.0);
}

inline ThresholdReport cond_mixed(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  detail::require_ordering(params, {ExponentOrdering::mixed}, "condition (mixed)");
  if (params.mu < 0.0) fail(ErrorCategory::regime, "mixed condition requires mu >= 0");
  const auto d = derive(params);
  const double q = params.q, p = params.p, a = params.a;
  const double gq_q = d.gamma_q * q, gp_p = d.gamma_p * p;
  const double lhs = std::pow(params.mu * std::pow(a, (1.0 - d.gamma_q) * q), gp_p - 2.0) *
                     std::pow(std::pow(a, (1.0 - d.gamma_p) * p), 2.0 - gq_q);
  const double rhs = mixed_rhs(params.dim, q, p, gn_q.c_pow(), gn_p.c_pow());
  return detail::finish_report("mixed", lhs, rhs, classify(params));
}

inline double mu_star(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  detail::require_ordering(params, {ExponentOrdering::mixed}, "mu_star");
  const auto d = derive(params);
  const double q = params.q, p = params.p, a = params.a;
  const double gq_q = d.gamma_q * q, gp_p = d.gamma_p * p;
  const double rhs = mixed_rhs(params.dim, q, p, gn_q.c_pow(), gn_p.c_pow());
  const double base = rhs / std::pow(std::pow(a, (1.0 - d.gamma_p) * p), 2.0 - gq_q);
  return std::pow(base, 1.0 / (gp_p - 2.0)) / std::pow(a, (1.0 - d.gamma_q) * q);
}

/// q = pbar < p: mu a^{4/N} < pbar / (2 C_{N,pbar}^{pbar}).
inline double critical_rhs(const GNConstants& gn_pbar) {
  const double pbar = critical_exponent(gn_pbar.dim).value();
  return pbar / (2.0 * std::pow(gn_pbar.c_np, pbar));
}

inline ThresholdReport cond_critical(const ModelParams& params, const GNConstants& gn_q, const GNConstants& /*gn_p*/) {
  detail::require_ordering(params, {ExponentOrdering::critical_lower}, "condition (critical)");
  if (params.mu < 0.0) fail(ErrorCategory::regime, "critical condition requires mu >= 0");
  const double lhs = params.mu * std::pow(params.a, 4.0 / params.dim);
  return detail::finish_report("critical", lhs, critical_rhs(gn_q), classify(params));
}

/// q <= pbar < p, mu < 0.
inline ThresholdReport cond_defocusing(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  detail::require_ordering(params, {ExponentOrdering::mixed, ExponentOrdering::critical_lower},
                           "condition (defocusing)");
  if (params.mu > 0.0) fail(ErrorCategory::regime, "defocusing condition requires mu <= 0");
  const auto d = derive(params);
  const double q = params.q, p = params.p, a = params.a;
  const double gq = d.gamma_q, gp = d.gamma_p;
  const double lhs = std::pow(std::abs(params.mu) * std::pow(a, q * (1.0 - gq)), p * gp - 2.0) *
                     std::pow(a, p * (1.0 - gp) * (2.0 - q * gq));
  const double rhs = std::pow((1.0 - gp) / (gn_q.c_pow() * (gp - gq)), p * gp - 2.0) *
                     std::pow(1.0 / (gp * gn_p.c_pow()), 2.0 - q * gq);
  return detail::finish_report("defocusing", lhs, rhs, classify(params));
}

/// Dispatches to the condition governing the params' regime.
inline ThresholdReport regime_condition(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  const auto o = ordering_of(params);
  if (params.mu < 0.0 && (o == ExponentOrdering::mixed || o == ExponentOrdering::critical_lower))
    return cond_defocusing(params, gn_q, gn_p);
  if (o == ExponentOrdering::mixed) return cond_mixed(params, gn_q, gn_p);
  if (o == ExponentOrdering::critical_lower) return cond_critical(params, gn_q, gn_p);
  fail(ErrorCategory::regime, "no explicit condition for exponent ordering " + std::string(to_string(o)));
}

/// g(t) = t^2 - mu gq C_q^q a^{(1-gq)q} t^{gq q} - gp C_p^p a^{(1-gp)p} t^{gp p},
/// the lower bound P(u) >= g(|grad u|_2) on the mass sphere.
inline double g_eval(double t, const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  const auto d = derive(params);
  const double q = params.q, p = params.p, a = params.a;
  return t * t - params.mu * d.gamma_q * gn_q.c_pow() * std::pow(a, (1.0 - d.gamma_q) * q) * std::pow(t, d.gamma_q * q) -
         d.gamma_p * gn_p.c_pow() * std::pow(a, (1.0 - d.gamma_p) * p) * std::pow(t, d.gamma_p * p);
}

inline GBound blowup_bound_M(const ModelParams& params, const GNConstants& gn_q, const GNConstants& gn_p) {
  detail::require_ordering(params, {ExponentOrdering::mixed}, "blowup_bound_M");
  if (!(params.mu > 0.0)) fail(ErrorCategory::regime, "blowup_bound_M requires mu > 0");
  if (!cond_mixed(params, gn_q, gn_p).condition_holds)
    fail(ErrorCategory::regime, "blowup_bound_M requires the mixed condition to hold");
  const auto d = derive(params);
  const double q = params.q, p = params.p, a = params.a;
  const double gq_q = d.gamma_q * q, gp_p = d.gamma_p * p;
  const double K = params.mu * d.gamma_q * gn_q.c_pow() * std::pow(a, (1.0 - d.gamma_q) * q);
  const double L = d.gamma_p * gn_p.c_pow() * std::pow(a, (1.0 - d.gamma_p) * p);
  const double d1 = 2.0 - gq_q, d2 = gp_p - gq_q;
  // g = t^{gq q} (psi - K), psi(t) = t^{2-gq q} - L t^{gp p - gq q}
  auto F = [&](double x) { return std::exp(d1 * x) - L * std::exp(d2 * x) - K; };
  const double xhat = std::log(d1 / (L * d2)) / (gp_p - 2.0);
  const auto roots = detail::unimodal_roots_log(F, xhat);
  if (roots.size() != 2) fail(ErrorCategory::structure, "g has no positive interval although the mixed condition holds");
  GBound out;
  out.r2 = std::exp(roots[0]);
  out.r3 = std::exp(roots[1]);
  auto g = [&](double t) { return t * t - K * std::pow(t, gq_q) - L * std::pow(t, gp_p); };
  const auto mn = boost::math::tools::brent_find_minima(g, 0.0, out.r2, std::numeric_limits<double>::digits / 2);
  out.m_bound = std::max(0.0, -mn.second);
  return out;
}

/// Largest mu with 2 R0(a_tilde + rho, mu)^2 < R1(a_tilde, mu)^2, restricted to the
/// range where the mixed condition holds at a_tilde + rho.
inline double stability_window(double a_tilde, double rho, const ModelParams& params, const GNConstants& gn_q,
                               const GNConstants& gn_p) {
  if (!(a_tilde > 0.0) || !(rho > 0.0)) fail(ErrorCategory::validation, "stability window needs a_tilde > 0 and rho > 0");
  detail::require_ordering(params, {ExponentOrdering::mixed}, "stability_window");
  ModelParams big = params, small = params;
  big.a = a_tilde + rho;
  small.a = a_tilde;
  const double mu_max = mu_star(big, gn_q, gn_p);
  auto window_holds = [&](double mu) {
    big.mu = small.mu = mu;
    const auto gb = h_roots(big, gn_q, gn_p);
    const auto gs = h_roots(small, gn_q, gn_p);
    if (!gb || !gs) return false;
    return std::log(2.0) + 2.0 * gb->log_r0 < 2.0 * gs->log_r1;
  };
  double lo = mu_max * 1e-12;
  if (!window_holds(lo)) {
    for (int i = 0; i < 40 && !window_holds(lo); ++i) lo *= 1e-6;
    if (!window_holds(lo)) fail(ErrorCategory::structure, "stability window is empty near mu = 0");
  }
  double hi = mu_max * (1.0 - 1e-12);
  if (window_holds(hi)) return hi;
  while (std::log(hi / lo) > 1e-12) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (window_holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace nlsmix

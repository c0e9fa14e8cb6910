#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "nlsmix/errors.hpp"

namespace nlsmix {

/// Exact ratio num/den (den > 0, reduced). Used to place exponents on the
/// L2-critical boundary without rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) fail(ErrorCategory::validation, "zero denominator in rational exponent");
    if (d < 0) { n = -n; d = -d; }
    const auto g = std::gcd(n < 0 ? -n : n, d);
    return {n / (g == 0 ? 1 : g), d / (g == 0 ? 1 : g)};
  }
};

/// Returns -1, 0, +1 for a < b, a == b, a > b.
inline int compare(const Rational& a, const Rational& b) {
  __extension__ using wide = __int128;  // products of two int64 do not fit in int64
  const wide lhs = static_cast<wide>(a.num) * b.den;
  const wide rhs = static_cast<wide>(b.num) * a.den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

/// A nonlinearity exponent. When the user supplied it as an exact ratio
/// ("10/3", "6", "3.25") the rational form is kept alongside the double.
struct Exponent {
  double value = 0.0;
  std::optional<Rational> exact;

  Exponent() = default;
  Exponent(double v) : value(v) {  // NOLINT(google-explicit-constructor)
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15)
      exact = Rational{static_cast<std::int64_t>(v), 1};
  }
  Exponent(Rational r) : value(r.value()), exact(r) {}  // NOLINT(google-explicit-constructor)

  operator double() const { return value; }  // NOLINT(google-explicit-constructor)

  /// Parses "a/b", an integer, or a plain decimal. Decimals without an
  /// exponent part are kept exact.
  static Exponent parse(std::string_view text) {
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    if (text.empty()) fail(ErrorCategory::validation, "empty exponent");
    auto parse_int = [](std::string_view s) -> std::optional<std::int64_t> {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
      return v;
    };
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
      const auto n = parse_int(trim(text.substr(0, slash)));
      const auto d = parse_int(trim(text.substr(slash + 1)));
      if (!n || !d) fail(ErrorCategory::validation, "cannot parse rational exponent '" + std::string(text) + "'");
      return Exponent(Rational::make(*n, *d));
    }
    const bool plain_decimal = text.find_first_of("eE") == std::string_view::npos;
    const auto dot = text.find('.');
    if (plain_decimal && dot != std::string_view::npos && text.size() - dot - 1 <= 15) {
      std::string digits(text.substr(0, dot));
      digits += text.substr(dot + 1);
      if (const auto n = parse_int(digits)) {
        std::int64_t den = 1;
        for (std::size_t i = 0; i < text.size() - dot - 1; ++i) den *= 10;
        return Exponent(Rational::make(*n, den));
      }
    }
    if (plain_decimal && dot == std::string_view::npos) {
      if (const auto n = parse_int(text)) return Exponent(Rational{*n, 1});
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail(ErrorCategory::validation, "cannot parse exponent '" + std::string(text) + "'");
    Exponent e;
    e.value = v;
    return e;
  }

  [[nodiscard]] std::string to_string() const {
    if (exact) {
      if (exact->den == 1) return std::to_string(exact->num);
      return std::to_string(exact->num) + "/" + std::to_string(exact->den);
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
  }
};

/// Tolerance for exponent comparisons when no exact form is available.
inline constexpr double kExponentTolerance = 1e-12;

/// Three-way comparison of an exponent against an exact threshold.
inline int compare(const Exponent& e, const Rational& threshold) {
  if (e.exact) return compare(*e.exact, threshold);
  const double t = threshold.value();
  if (std::abs(e.value - t) <= kExponentTolerance * std::max(1.0, std::abs(t))) return 0;
  return e.value < t ? -1 : 1;
}

inline int compare(const Exponent& a, const Exponent& b) {
  if (a.exact && b.exact) return compare(*a.exact, *b.exact);
  if (std::abs(a.value - b.value) <= kExponentTolerance * std::max(1.0, std::abs(b.value))) return 0;
  return a.value < b.value ? -1 : 1;
}

/// L2-critical exponent 2 + 4/N as an exact ratio.
inline Rational critical_exponent(int dim) { return Rational::make(2 * dim + 4, dim); }

/// Sobolev exponent 2N/(N-2); absent (infinite) for N = 1, 2.
inline std::optional<Rational> sobolev_exponent(int dim) {
  if (dim <= 2) return std::nullopt;
  return Rational::make(2 * dim, dim - 2);
}

/// gamma_s = N (s - 2) / (2 s).
inline double gamma_of(int dim, double s) { return dim * (s - 2.0) / (2.0 * s); }

/// Problem instance: dimension, exponents q < p, prescribed L2 norm a and
/// coupling mu of the lower-order power.
struct ModelParams {
  int dim = 1;
  Exponent p{4.0};
  Exponent q{3.0};
  double a = 1.0;
  double mu = 0.0;

  /// Throws a validation error naming the first violated inequality.
  void validate() const {
    if (dim < 1 || dim > 3) fail(ErrorCategory::validation, "dimension N must satisfy 1 <= N <= 3 (got " + std::to_string(dim) + ")");
    if (!std::isfinite(p.value) || !std::isfinite(q.value) || !std::isfinite(a) || !std::isfinite(mu))
      fail(ErrorCategory::validation, "parameters must be finite");
    if (compare(q, Rational{2, 1}) <= 0) fail(ErrorCategory::validation, "violated 2 < q (q = " + q.to_string() + ")");
    if (compare(q, p) >= 0) fail(ErrorCategory::validation, "violated q < p (q = " + q.to_string() + ", p = " + p.to_string() + ")");
    if (const auto s = sobolev_exponent(dim); s && compare(p, *s) >= 0)
      fail(ErrorCategory::validation, "violated p < 2* = " + std::to_string(s->value()) + " (p = " + p.to_string() + ")");
    if (!(a > 0.0)) fail(ErrorCategory::validation, "violated a > 0");
  }
};

struct DerivedExponents {
  double pbar = 0;
  double gamma_p = 0;
  double gamma_q = 0;
  double two_star = std::numeric_limits<double>::infinity();

  [[nodiscard]] double gp_p(double p) const { return gamma_p * p; }
};

inline DerivedExponents derive(const ModelParams& params) {
  params.validate();
  DerivedExponents d;
  d.pbar = critical_exponent(params.dim).value();
  d.gamma_p = gamma_of(params.dim, params.p);
  d.gamma_q = gamma_of(params.dim, params.q);
  if (const auto s = sobolev_exponent(params.dim)) d.two_star = s->value();
  return d;
}

/// Position of (q, p) relative to the L2-critical exponent, independent of mu.
enum class ExponentOrdering {
  critical_leading,   ///< q < p = pbar
  mixed,              ///< q < pbar < p
  critical_lower,     ///< q = pbar < p
  both_subcritical,   ///< q < p < pbar
  both_supercritical, ///< pbar < q < p
};

enum class RegimeTag {
  critical_leading,
  mixed_focusing,
  critical_perturbation,
  supercritical_defocusing,
  pure_subcritical,
  pure_supercritical,
  homogeneous,
};

struct Regime {
  RegimeTag tag = RegimeTag::homogeneous;
  ExponentOrdering ordering = ExponentOrdering::mixed;
  bool defocusing = false;  ///< mu < 0

  friend bool operator==(const Regime&, const Regime&) = default;
};

constexpr std::string_view to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::critical_leading: return "CriticalLeading";
    case RegimeTag::mixed_focusing: return "MixedFocusing";
    case RegimeTag::critical_perturbation: return "CriticalPerturbation";
    case RegimeTag::supercritical_defocusing: return "SupercriticalDefocusing";
    case RegimeTag::pure_subcritical: return "PureSubcritical";
    case RegimeTag::pure_supercritical: return "PureSupercritical";
    case RegimeTag::homogeneous: return "Homogeneous";
  }
  return "?";
}

constexpr std::string_view to_string(ExponentOrdering o) {
  switch (o) {
    case ExponentOrdering::critical_leading: return "q<p=pbar";
    case ExponentOrdering::mixed: return "q<pbar<p";
    case ExponentOrdering::critical_lower: return "q=pbar<p";
    case ExponentOrdering::both_subcritical: return "q<p<pbar";
    case ExponentOrdering::both_supercritical: return "pbar<q<p";
  }
  return "?";
}

inline ExponentOrdering ordering_of(const ModelParams& params) {
  params.validate();
  const Rational pbar = critical_exponent(params.dim);
  const int cp = compare(params.p, pbar);
  const int cq = compare(params.q, pbar);
  if (cp == 0) return ExponentOrdering::critical_leading;
  if (cp < 0) return ExponentOrdering::both_subcritical;
  if (cq > 0) return ExponentOrdering::both_supercritical;
  if (cq == 0) return ExponentOrdering::critical_lower;
  return ExponentOrdering::mixed;
}

inline Regime classify(const ModelParams& params) {
  Regime r;
  r.ordering = ordering_of(params);
  r.defocusing = params.mu < 0.0;
  if (params.mu == 0.0) {
    r.tag = RegimeTag::homogeneous;
    return r;
  }
  switch (r.ordering) {
    case ExponentOrdering::critical_leading: r.tag = RegimeTag::critical_leading; break;
    case ExponentOrdering::both_subcritical: r.tag = RegimeTag::pure_subcritical; break;
    case ExponentOrdering::both_supercritical: r.tag = RegimeTag::pure_supercritical; break;
    case ExponentOrdering::critical_lower:
      r.tag = r.defocusing ? RegimeTag::supercritical_defocusing : RegimeTag::critical_perturbation;
      break;
    case ExponentOrdering::mixed:
      r.tag = r.defocusing ? RegimeTag::supercritical_defocusing : RegimeTag::mixed_focusing;
      break;
  }
  return r;
}

}  // namespace nlsmix

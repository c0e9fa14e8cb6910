#pragma once

#include <cmath>
#include <optional>

#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"
#include "nlsmix/shooting.hpp"

namespace nlsmix {

/// Best Gagliardo-Nirenberg constant for L^p, together with the soliton
/// data it was read from.
struct GNConstants {
  int dim = 1;
  double p = 4.0;
  double c_np = 0.0;                 ///< |u|_p <= c_np |grad u|_2^gamma |u|_2^(1-gamma)
  double mass_w = 0.0;               ///< |w_{N,p}|_2
  std::optional<double> abar_n;      ///< critical mass, p = pbar only
  std::optional<double> abar_direct; ///< |w_{N,pbar}|_2 by quadrature
  double residual = 0.0;             ///< ODE residual of the soliton
  RadialGrid grid;

  /// c_np^p, the form in which the constant enters every threshold.
  [[nodiscard]] double c_pow() const { return std::pow(c_np, p); }
};

inline RadialGrid default_soliton_grid(int dim) { return RadialGrid{dim, 40.0, 16384}; }

/// Unique positive radial solution of -Delta w + w = w^{p-1}.
inline RadialField shoot_soliton(int dim, double p, const RadialGrid& grid, ShootingReport* report = nullptr) {
  if (dim < 1 || dim > 3) fail(ErrorCategory::validation, "soliton dimension must be 1..3");
  if (!(p > 2.0)) fail(ErrorCategory::validation, "soliton exponent must satisfy p > 2");
  if (dim == 3 && !(p < 6.0)) fail(ErrorCategory::validation, "soliton exponent must satisfy p < 2* = 6");
  if (grid.dim != dim) fail(ErrorCategory::validation, "grid dimension mismatch");
  StationaryProblem prob{dim, 1.0, p, 3.0, 0.0};
  return shoot_ground_state(prob, grid, report);
}

inline RadialField shoot_soliton(int dim, double p) { return shoot_soliton(dim, p, default_soliton_grid(dim)); }

/// |u|_p / (|grad u|_2^gamma_p |u|_2^(1-gamma_p)), scale invariant.
inline double gn_ratio(double grad2, double mp, double mass2, int dim, double p) {
  const double g = gamma_of(dim, p);
  return std::pow(mp, 1.0 / p) / (std::pow(grad2, 0.5 * g) * std::pow(mass2, 0.5 * (1.0 - g)));
}

inline double gn_ratio(const RadialField& u, double p) {
  return gn_ratio(u.grad2(), u.power_integral(p), u.mass2(), u.grid.dim, p);
}

inline GNConstants gn_constant(int dim, double p, const RadialGrid& grid) {
  ShootingReport rep;
  const RadialField w = shoot_soliton(dim, p, grid, &rep);
  GNConstants out;
  out.dim = dim;
  out.p = p;
  out.grid = grid;
  out.residual = rep.residual;
  const double mass2 = w.mass2();
  out.mass_w = std::sqrt(mass2);
  out.c_np = gn_ratio(w.grad2(), w.power_integral(p), mass2, dim, p);
  if (compare(Exponent(p), critical_exponent(dim)) == 0) {
    const double pbar = critical_exponent(dim).value();
    out.abar_n = std::pow(pbar / (2.0 * std::pow(out.c_np, pbar)), dim / 4.0);
    out.abar_direct = out.mass_w;
  }
  return out;
}

inline GNConstants gn_constant(int dim, double p) { return gn_constant(dim, p, default_soliton_grid(dim)); }

/// Constants for both nonlinearities of a model.
struct GNPair {
  GNConstants q;
  GNConstants p;
};

inline GNPair gn_pair(const ModelParams& params) {
  params.validate();
  return {gn_constant(params.dim, params.q), gn_constant(params.dim, params.p)};
}

}  // namespace nlsmix

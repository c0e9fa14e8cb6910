#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "nlsmix/criteria.hpp"
#include "nlsmix/errors.hpp"
#include "nlsmix/fiber.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"
#include "nlsmix/shooting.hpp"

namespace nlsmix {

enum class Branch { LocalMin, MountainPass, Unique };

constexpr std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::LocalMin: return "localmin";
    case Branch::MountainPass: return "mountainpass";
    case Branch::Unique: return "unique";
  }
  return "?";
}

inline Branch parse_branch(std::string_view s) {
  if (s == "localmin") return Branch::LocalMin;
  if (s == "mountainpass") return Branch::MountainPass;
  if (s == "unique") return Branch::Unique;
  fail(ErrorCategory::validation, "unknown branch '" + std::string(s) + "' (localmin|mountainpass|unique)");
}

struct GroundStateResult {
  RadialField profile;
  double lambda = 0;
  double energy_level = 0;
  double pohozaev_residual = 0;  ///< |P| / |grad u|_2^2
  double ode_residual = 0;       ///< weighted L2, shooting results only
  PohozaevClass fiber_class = PohozaevClass::Pzero;
  Branch branch = Branch::Unique;
  double mass_error = 0;         ///< | |u|_2 - a | / a
  FiberTriple triple;
  std::size_t iterations = 0;

  [[nodiscard]] double grad_norm() const { return std::sqrt(triple.grad2); }
};

/// Radial grid adapted to the decay rate sqrt(-lambda) of a stationary state.
inline RadialGrid stationary_grid(int dim, double lambda, std::size_t points = 16384) {
  return RadialGrid{dim, 40.0 / std::sqrt(std::abs(lambda)), points};
}

inline StationaryProblem stationary_problem(double lambda, const ModelParams& params) {
  return StationaryProblem{params.dim, -lambda, params.p, params.q, params.mu};
}

/// Positive decaying radial solution of -Delta u = lambda u + |u|^{p-2}u + mu |u|^{q-2}u.
inline RadialField stationary_shoot(double lambda, const ModelParams& params, const RadialGrid& grid,
                                    ShootingReport* report = nullptr) {
  params.validate();
  if (!(lambda < 0.0)) fail(ErrorCategory::validation, "stationary shooting requires lambda < 0");
  if (grid.dim != params.dim) fail(ErrorCategory::validation, "grid dimension mismatch");
  return shoot_ground_state(stationary_problem(lambda, params), grid, report);
}

inline RadialField stationary_shoot(double lambda, const ModelParams& params) {
  return stationary_shoot(lambda, params, stationary_grid(params.dim, lambda));
}

struct MassCurvePoint {
  double lambda = 0;
  bool ok = false;
  double mass = 0;  ///< |u_lambda|_2
  double energy = 0;
  double grad2 = 0;
  PohozaevClass fiber_class = PohozaevClass::Pzero;
  std::string error;
};

inline MassCurvePoint mass_point(double lambda, const ModelParams& params, std::size_t points = 16384) {
  MassCurvePoint pt;
  pt.lambda = lambda;
  try {
    const auto u = stationary_shoot(lambda, params, stationary_grid(params.dim, lambda, points));
    const auto tr = triple_of(u, params);
    pt.mass = std::sqrt(tr.mass2);
    pt.energy = energy(tr, params);
    pt.grad2 = tr.grad2;
    pt.fiber_class = curvature_class(tr, params);
    pt.ok = true;
  } catch (const Error& e) {
    pt.error = e.what();
  }
  return pt;
}

/// Shooting results along a sorted grid of negative lambdas; failures become gaps.
inline std::vector<MassCurvePoint> mass_curve(const std::vector<double>& lambda_grid, const ModelParams& params,
                                              std::size_t points = 16384) {
  params.validate();
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] < 0.0)) fail(ErrorCategory::validation, "mass curve lambdas must be negative");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) fail(ErrorCategory::validation, "mass curve lambdas must be sorted increasingly");
  }
  std::vector<MassCurvePoint> out;
  out.reserve(lambda_grid.size());
  for (double l : lambda_grid) out.push_back(mass_point(l, params, points));
  return out;
}

/// lambda = -10^x for x uniform on [log10 |from|, log10 |to|], returned sorted increasingly.
inline std::vector<double> log_lambda_grid(double from, double to, std::size_t steps) {
  std::vector<double> out;
  if (steps == 0) return out;
  const double x0 = std::log10(std::abs(from)), x1 = std::log10(std::abs(to));
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = steps == 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(steps - 1);
    out.push_back(-std::pow(10.0, x));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct SolveOptions {
  double lambda_min = 1e-8;  ///< smallest |lambda| scanned
  double lambda_max = 1e4;
  int per_decade = 4;
  std::size_t points = 16384;
  double mass_rtol = 1e-8;
};

namespace detail {

inline GroundStateResult finish_state(RadialField u, double lambda, const ModelParams& params, Branch branch,
                                      const StationaryProblem* prob) {
  GroundStateResult g;
  g.triple = triple_of(u, params);
  g.lambda = lambda;
  g.energy_level = energy(g.triple, params);
  g.pohozaev_residual = std::abs(pohozaev(g.triple, params)) / g.triple.grad2;
  g.fiber_class = curvature_class(g.triple, params);
  g.branch = branch;
  g.mass_error = std::abs(std::sqrt(g.triple.mass2) - params.a) / params.a;
  if (prob) g.ode_residual = ode_residual(*prob, u);
  g.profile = std::move(u);
  return g;
}

/// Shooting solution at the lambda where |u_lambda|_2 = a, bracketed in x = log |lambda|.
inline GroundStateResult match_mass(const ModelParams& params, double x_lo, double x_hi, Branch branch,
                                    const SolveOptions& opt) {
  auto f = [&](double x) {
    const double lambda = -std::exp(x);
    const auto u = stationary_shoot(lambda, params, stationary_grid(params.dim, lambda, opt.points));
    const double m = std::sqrt(u.mass2());
    const double r = (m - params.a) / params.a;
    return std::abs(r) < opt.mass_rtol ? 0.0 : r;  // a zero stops the bracket search
  };
  auto tol = [](double l, double r) { return std::abs(r - l) < 1e-12 * std::max(1.0, std::abs(l)); };
  std::uintmax_t iters = 100;
  const auto [l, r] = boost::math::tools::toms748_solve(f, x_lo, x_hi, tol, iters);
  const double fl = std::abs(f(l)), fr = std::abs(f(r));
  const double x = fl <= fr ? l : r;
  const double lambda = -std::exp(x);
  const auto prob = stationary_problem(lambda, params);
  auto u = stationary_shoot(lambda, params, stationary_grid(params.dim, lambda, opt.points));
  auto res = finish_state(std::move(u), lambda, params, branch, &prob);
  res.iterations = iters;
  return res;
}

}  // namespace detail

/// Does the regime admit the requested branch, given its explicit condition?
inline void check_branch_admissible(const ModelParams& params, Branch branch, const GNPair& gn) {
  const auto regime = classify(params);
  if (branch == Branch::LocalMin || branch == Branch::MountainPass) {
    if (regime.tag != RegimeTag::mixed_focusing)
      fail(ErrorCategory::no_branch, std::string(to_string(branch)) + " branch exists only in the mixed focusing regime (got " +
                                         std::string(to_string(regime.tag)) + ")");
    if (!cond_mixed(params, gn.q, gn.p).condition_holds)
      fail(ErrorCategory::no_branch, "mixed condition fails; the two-branch structure is not guaranteed");
    return;
  }
  if (regime.tag == RegimeTag::critical_perturbation && !cond_critical(params, gn.q, gn.p).condition_holds)
    fail(ErrorCategory::no_branch, "critical condition fails; no positive-level state is guaranteed");
  if (regime.tag == RegimeTag::supercritical_defocusing && !cond_defocusing(params, gn.q, gn.p).condition_holds)
    fail(ErrorCategory::no_branch, "defocusing condition fails; no positive-level state is guaranteed");
}

/// Normalized stationary state on the requested branch, located on the
/// shooting mass curve and refined by bracketing in log |lambda|.
inline GroundStateResult solve_prescribed_mass(const ModelParams& params, Branch branch, const GNPair& gn,
                                               const SolveOptions& opt = {}) {
  params.validate();
  check_branch_admissible(params, branch, gn);
  const double x0 = std::log(opt.lambda_min), x1 = std::log(opt.lambda_max);
  const int n = std::max(2, static_cast<int>(std::ceil((x1 - x0) / std::log(10.0) * opt.per_decade)) + 1);
  std::vector<double> xs(n), rs(n, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < n; ++i) {
    xs[i] = x0 + (x1 - x0) * i / (n - 1);
    const auto pt = mass_point(-std::exp(xs[i]), params, opt.points);
    if (pt.ok) rs[i] = pt.mass - params.a;
  }
  std::vector<GroundStateResult> found;
  for (int i = 1; i < n; ++i) {
    if (std::isnan(rs[i - 1]) || std::isnan(rs[i])) continue;
    if ((rs[i - 1] > 0.0) == (rs[i] > 0.0)) continue;
    try {
      found.push_back(detail::match_mass(params, xs[i - 1], xs[i], branch, opt));
    } catch (const Error&) {
    }
  }
  if (found.empty())
    fail(ErrorCategory::no_branch, "mass curve never reaches a = " + std::to_string(params.a) + " for |lambda| in [" +
                                       std::to_string(opt.lambda_min) + ", " + std::to_string(opt.lambda_max) + "]");
  auto by_energy = [](const GroundStateResult& x, const GroundStateResult& y) { return x.energy_level < y.energy_level; };
  std::vector<GroundStateResult> pool;
  if (branch == Branch::Unique) {
    pool = std::move(found);
  } else {
    const auto want = branch == Branch::LocalMin ? PohozaevClass::Pplus : PohozaevClass::Pminus;
    for (auto& g : found)
      if (g.fiber_class == want) pool.push_back(std::move(g));
    if (pool.empty())
      fail(ErrorCategory::no_branch, "no state of class " + std::string(to_string(want)) + " on the mass curve");
  }
  return std::move(*std::min_element(pool.begin(), pool.end(), by_energy));
}

inline GroundStateResult solve_prescribed_mass(double a, Branch branch, ModelParams params, const GNPair& gn,
                                               const SolveOptions& opt = {}) {
  params.a = a;
  return solve_prescribed_mass(params, branch, gn, opt);
}

// ---------------------------------------------------------------------------
// Mass-constrained gradient flow

/// Radial profile of the form amp * exp(-r^2 / (2 width^2)).
inline RadialField gaussian_profile(const RadialGrid& grid, double amp, double width) {
  RadialField f;
  f.grid = grid;
  f.values.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double r = grid.r(j) / width;
    f.values[j] = amp * std::exp(-0.5 * r * r);
  }
  return f;
}

inline void normalize_mass(RadialField& f, double a) {
  const double m = std::sqrt(f.mass2());
  if (!(m > 0.0)) fail(ErrorCategory::validation, "cannot normalize a zero profile");
  const double k = a / m;
  for (auto& v : f.values) v *= k;
  for (auto& v : f.slope) v *= k;
}

/// s * u on the same grid: e^{Ns/2} u(e^s r).
inline RadialField dilate(const RadialField& u, double s) {
  RadialInterpolant interp(u);
  const double k = std::exp(0.5 * u.grid.dim * s), e = std::exp(s);
  RadialField out;
  out.grid = u.grid;
  out.values.resize(u.grid.points);
  for (std::size_t j = 0; j < u.grid.points; ++j) out.values[j] = k * interp(e * u.grid.r(j));
  if (!u.slope.empty()) {
    out.slope.resize(u.grid.points);
    for (std::size_t j = 0; j < u.grid.points; ++j) out.slope[j] = k * e * interp.slope(e * u.grid.r(j));
  }
  return out;
}

struct FlowConfig {
  double tau0 = 1e-2;
  double tau_max = 1.0;
  std::size_t max_iterations = 200000;
  double energy_tol = 1e-12;   ///< stop when the per-step decrement falls below this
  double lambda_tol = 1e-10;   ///< and the multiplier moves less than this (relative)
  double residual_tol = 1e-7;  ///< and the discrete constrained gradient is this small (relative to |lambda|)
  std::optional<double> r0;    ///< |grad u|_2 must stay below; taken from the criteria module when absent
};

/// Discrete energy on the radial grid: stiffness on faces r_{j+1/2}^{N-1},
/// lumped trapezoid mass, Dirichlet condition at the outer node.
class RadialDiscretization {
 public:
  explicit RadialDiscretization(const RadialGrid& grid) : grid_(grid) {
    const std::size_t n = grid.points;
    const double h = grid.step();
    const double omega = sphere_area(grid.dim);
    mass_.assign(n, 0.0);
    std::vector<double> unit(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
      mass_[j] = omega * h * w * std::pow(grid.r(j), grid.dim - 1);
    }
    if (grid.dim == 2) mass_[0] += omega * h * h / 12.0;
    if (grid.dim == 3) mass_[0] -= omega * std::pow(h, 4) / 120.0;
    face_.assign(n - 1, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) face_[j] = omega * std::pow((j + 0.5) * h, grid.dim - 1) / h;
  }

  [[nodiscard]] const std::vector<double>& mass() const { return mass_; }
  [[nodiscard]] std::size_t size() const { return mass_.size(); }

  [[nodiscard]] double mass2(const std::vector<double>& u) const {
    double s = 0;
    for (std::size_t j = 0; j < u.size(); ++j) s += mass_[j] * u[j] * u[j];
    return s;
  }

  [[nodiscard]] double grad2(const std::vector<double>& u) const {
    double s = 0;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) s += face_[j] * (u[j + 1] - u[j]) * (u[j + 1] - u[j]);
    return s;
  }

  [[nodiscard]] double power(const std::vector<double>& u, double e) const {
    double s = 0;
    for (std::size_t j = 0; j < u.size(); ++j) s += mass_[j] * std::pow(std::abs(u[j]), e);
    return s;
  }

  [[nodiscard]] FiberTriple triple(const std::vector<double>& u, const ModelParams& params) const {
    return {grad2(u), power(u, params.q), power(u, params.p), mass2(u)};
  }

  [[nodiscard]] double energy(const std::vector<double>& u, const ModelParams& params) const {
    return nlsmix::energy(triple(u, params), params);
  }

  /// K u (stiffness applied).
  [[nodiscard]] std::vector<double> stiffness(const std::vector<double>& u) const {
    const std::size_t n = u.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double flux = face_[j] * (u[j + 1] - u[j]);
      out[j] -= flux;
      out[j + 1] += flux;
    }
    return out;
  }

  /// Gradient of the discrete energy: K u - M f(u).
  [[nodiscard]] std::vector<double> gradient(const std::vector<double>& u, const ModelParams& params) const {
    auto g = stiffness(u);
    for (std::size_t j = 0; j < u.size(); ++j) g[j] -= mass_[j] * force(u[j], params);
    return g;
  }

  static double force(double u, const ModelParams& params) {
    return signed_power(u, params.p - 1.0) + params.mu * signed_power(u, params.q - 1.0);
  }

  /// Solves (M + tau K) x = rhs with x fixed to 0 at the outer node.
  [[nodiscard]] std::vector<double> solve_shifted(double tau, const std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    const std::size_t m = n - 1;  // unknowns 0 .. n-2
    std::vector<double> diag(m), upper(m, 0.0), x(n, 0.0), c(m), d(m);
    for (std::size_t j = 0; j < m; ++j) {
      diag[j] = mass_[j] + tau * (face_[j] + (j > 0 ? face_[j - 1] : 0.0));
      if (j + 1 < m) upper[j] = -tau * face_[j];
    }
    // Thomas algorithm; the matrix is symmetric, so lower == upper
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t j = 1; j < m; ++j) {
      const double den = diag[j] - upper[j - 1] * c[j - 1];
      c[j] = upper[j] / den;
      d[j] = (rhs[j] - upper[j - 1] * d[j - 1]) / den;
    }
    x[m - 1] = d[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) x[j] = d[j] - c[j] * x[j + 1];
    return x;
  }

 private:
  RadialGrid grid_;
  std::vector<double> mass_;
  std::vector<double> face_;
};

struct FlowTrace {
  std::vector<double> energy;
  std::vector<double> grad2;
  std::vector<double> residual;  ///< relative constrained-gradient norm before each step
  std::size_t rejected = 0;
};

/// Local minimiser of E on the mass sphere near the origin of H^1. Each step
/// moves against the constrained gradient K u - M f(u) - lambda M u,
/// preconditioned by K + |lambda| M, then rescales exactly to mass a; the step
/// is halved whenever the energy would increase.
inline GroundStateResult gradient_flow_local_min(const ModelParams& params, const RadialField& init,
                                                 const FlowConfig& flow, const GNPair& gn, FlowTrace* trace = nullptr) {
  params.validate();
  check_branch_admissible(params, Branch::LocalMin, gn);
  double r0 = 0;
  if (flow.r0) {
    r0 = *flow.r0;
  } else {
    const auto geom = h_roots(params, gn.q, gn.p);
    if (!geom) fail(ErrorCategory::no_branch, "h has no positive interval; the local-min well is not separated");
    r0 = geom->r0;
  }
  const RadialDiscretization disc(init.grid);
  const double a2 = params.a * params.a;
  std::vector<double> u = init.values;
  u.back() = 0.0;
  auto project = [&](std::vector<double>& v) {
    const double m = disc.mass2(v);
    if (!(m > 0.0)) fail(ErrorCategory::flow, "flow iterate lost all mass");
    const double k = std::sqrt(a2 / m);
    for (auto& x : v) x *= k;
  };
  project(u);
  if (disc.grad2(u) >= r0 * r0)
    fail(ErrorCategory::flow, "initial datum has |grad u|_2 = " + std::to_string(std::sqrt(disc.grad2(u))) +
                                  " >= R0 = " + std::to_string(r0));
  double e = disc.energy(u, params);
  double tau = flow.tau0;
  double lambda_prev = std::numeric_limits<double>::quiet_NaN();
  std::size_t it = 0;
  std::vector<double> cres(u.size()), v(u.size());
  bool converged = false;
  for (; it < flow.max_iterations; ++it) {
    const auto tr = disc.triple(u, params);
    const double lambda = rayleigh_lambda(tr, params);
    // constrained gradient r = K u - M f(u) - lambda M u, preconditioned by K + |lambda| M
    const auto g = disc.gradient(u, params);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double m = disc.mass()[j];
      cres[j] = g[j] - lambda * m * u[j];
      if (j + 1 < u.size()) {
        num += cres[j] * cres[j] / m;
        den += m * u[j] * u[j];
      }
    }
    const double rel_residual = std::sqrt(num / den) / std::abs(lambda);
    const bool lambda_stable = std::abs(lambda - lambda_prev) <= flow.lambda_tol * std::abs(lambda);
    lambda_prev = lambda;
    if (trace) trace->residual.push_back(rel_residual);
    if (it > 0 && lambda_stable && rel_residual < flow.residual_tol) {
      converged = true;
      break;
    }
    const double shift = std::max(std::abs(lambda), 1e-12);
    auto z = disc.solve_shifted(1.0 / shift, cres);
    for (auto& x : z) x /= shift;
    double ev = 0;
    for (;;) {
      for (std::size_t j = 0; j < u.size(); ++j) v[j] = u[j] - tau * z[j];
      project(v);
      ev = disc.energy(v, params);
      if (ev <= e) break;
      tau *= 0.5;
      if (trace) ++trace->rejected;
      if (tau < 1e-12) break;
    }
    if (tau < 1e-12) {
      // energy differences have reached rounding level; accept if the gradient is small
      if (rel_residual < 100.0 * flow.residual_tol) {
        converged = true;
        break;
      }
      fail(ErrorCategory::flow, "step size underflow in gradient flow (residual " + std::to_string(rel_residual) + ")");
    }
    const double g2 = disc.grad2(v);
    if (g2 >= r0 * r0)
      fail(ErrorCategory::flow, "flow left the ball |grad u|_2 < R0 (|grad u|_2 = " + std::to_string(std::sqrt(g2)) +
                                    ", R0 = " + std::to_string(r0) + ")");
    const double decrement = e - ev;
    u.swap(v);
    e = ev;
    if (trace) {
      trace->energy.push_back(e);
      trace->grad2.push_back(g2);
    }
    tau = std::min(flow.tau_max, tau * 1.5);
    if (decrement < flow.energy_tol && lambda_stable && rel_residual < 10.0 * flow.residual_tol) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged) fail(ErrorCategory::flow, "gradient flow did not converge in " + std::to_string(it) + " iterations");
  RadialField prof;
  prof.grid = init.grid;
  prof.values = u;
  const auto tr = disc.triple(u, params);
  GroundStateResult res = detail::finish_state(std::move(prof), rayleigh_lambda(tr, params), params, Branch::LocalMin, nullptr);
  res.iterations = it;
  return res;
}

/// Starting datum for the local-min flow: a Gaussian of mass a dilated to the
/// local minimum s_u of its own fiber map, which sits inside the negative well.
inline RadialField local_min_seed(const ModelParams& params, const RadialGrid& grid) {
  auto g = gaussian_profile(grid, 1.0, grid.radius / 20.0);
  normalize_mass(g, params.a);
  const auto cp = fiber_critical_points(triple_of(g, params), params);
  if (!cp.s_u) fail(ErrorCategory::structure, "seed fiber map has no local minimum");
  auto seeded = dilate(g, *cp.s_u);
  normalize_mass(seeded, params.a);
  return seeded;
}

// ---------------------------------------------------------------------------
// Asymptotic sweeps

enum class SweepVariable { mu_to_zero, q_to_pbar };

struct AsymptoticRow {
  double parameter = 0;  ///< mu or q
  bool ok = false;
  double m = 0;          ///< m(a, mu): local-min level
  double grad_tilde = 0; ///< |grad u~|_2
  double r0 = 0;
  double log_r0 = 0;
  std::optional<double> sigma;      ///< mountain-pass level
  std::optional<double> hat_to_u0;  ///< |u^ - u~_0|_{H1}, u~_0 the mu = 0 state
  std::string error;
};

/// Data shared by every row of a sweep: the mu = 0 reference state (mu
/// sweeps only) and the constant of the fixed leading power.
struct SweepContext {
  SweepVariable vary = SweepVariable::mu_to_zero;
  ModelParams base;
  std::optional<GroundStateResult> u0;
  GNConstants gn_p;
};

inline SweepContext sweep_context(const ModelParams& base, SweepVariable vary, const SolveOptions& opt = {}) {
  SweepContext ctx;
  ctx.vary = vary;
  ctx.base = base;
  ctx.gn_p = gn_constant(base.dim, base.p);
  if (vary == SweepVariable::mu_to_zero) {
    ModelParams zero = base;
    zero.mu = 0.0;
    GNPair gn{gn_constant(base.dim, base.q), ctx.gn_p};
    ctx.u0 = solve_prescribed_mass(zero, Branch::Unique, gn, opt);
  }
  return ctx;
}

/// One row; failures are recorded in the row, never thrown. Safe to call
/// concurrently on a shared context.
inline AsymptoticRow asymptotic_row(const SweepContext& ctx, double value, const SolveOptions& opt = {}) {
  AsymptoticRow row;
  row.parameter = value;
  try {
    ModelParams prm = ctx.base;
    if (ctx.vary == SweepVariable::mu_to_zero) prm.mu = value;
    else prm.q = Exponent(value);
    prm.validate();
    GNPair gn{gn_constant(prm.dim, prm.q), ctx.gn_p};
    const auto geom = h_roots(prm, gn.q, gn.p);
    if (geom) {
      row.r0 = geom->r0;
      row.log_r0 = geom->log_r0;
    }
    const auto tilde = solve_prescribed_mass(prm, Branch::LocalMin, gn, opt);
    row.m = tilde.energy_level;
    row.grad_tilde = tilde.grad_norm();
    if (ctx.vary == SweepVariable::mu_to_zero) {
      const auto hat = solve_prescribed_mass(prm, Branch::MountainPass, gn, opt);
      row.sigma = hat.energy_level;
      row.hat_to_u0 = profile_distance(resample(hat.profile, ctx.u0->profile.grid), ctx.u0->profile).h1;
    }
    row.ok = true;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

/// Rows of (parameter, levels, gradient norms) as mu -> 0+ or q -> pbar-.
/// For q sweeps the base params' q is replaced by each value in turn.
inline std::vector<AsymptoticRow> asymptotic_sweep(const ModelParams& base, SweepVariable vary,
                                                   const std::vector<double>& values, const SolveOptions& opt = {}) {
  std::vector<AsymptoticRow> rows;
  if (values.empty()) return rows;
  const auto ctx = sweep_context(base, vary, opt);
  for (double v : values) rows.push_back(asymptotic_row(ctx, v, opt));
  return rows;
}

}  // namespace nlsmix

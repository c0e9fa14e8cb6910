#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nlsmix/criteria.hpp"
#include "nlsmix/errors.hpp"
#include "nlsmix/fiber.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/solvers.hpp"
#include "nlsmix/wave.hpp"

namespace nlsmix {

namespace detail {

/// |z|^{2e} from n2 = |z|^2, with a multiplication fast path for integer e.
inline double norm_power(double n2, double e) {
  const double r = std::round(e);
  if (e == r && r >= 0.0 && r <= 8.0) {
    double out = 1.0;
    for (int i = 0; i < static_cast<int>(r); ++i) out *= n2;
    return out;
  }
  return std::pow(n2, e);
}

}  // namespace detail

/// Strang splitting for i psi_t + Lap psi + |psi|^{p-2} psi + mu |psi|^{q-2} psi = 0.
/// The nonlinear substep is the exact pointwise phase rotation; the linear
/// substep is exact in the discrete Fourier basis (periodic) or Crank-Nicolson
/// on the finite-volume Laplacian (radial). Both are unitary, and a step with
/// -dt undoes a step with dt.
class Propagator {
 public:
  Propagator(const WaveGrid& grid, const ModelParams& params) : grid_(grid), params_(params), measures_(grid) {
    params.validate();
    if (grid.dim != params.dim) fail(ErrorCategory::validation, "wave grid dimension differs from params.dim");
  }

  /// Returns the largest rotation rate |psi|^{p-2} + |mu| |psi|^{q-2}, which
  /// the rotation leaves unchanged.
  double nonlinear(std::vector<cplx>& psi, double dt) const {
    const double hp = 0.5 * (params_.p - 2.0), hq = 0.5 * (params_.q - 2.0), mu = params_.mu;
    double top = 0;
    for (auto& v : psi) {
      const double n2 = std::norm(v);
      const double a = detail::norm_power(n2, hp), b = detail::norm_power(n2, hq);
      top = std::max(top, a + std::abs(mu) * b);
      v *= std::polar(1.0, dt * (a + mu * b));
    }
    return top;
  }

  void linear(std::vector<cplx>& psi, double dt) {
    if (grid_.geometry == Geometry::periodic) {
      auto& fft = measures_.fft();
      const auto& k = measures_.k();
      const std::size_t n = psi.size();
      std::copy(psi.begin(), psi.end(), fft.data());
      fft.forward();
      if (dt != phase_dt_) {
        phase_.resize(n);
        for (std::size_t j = 0; j < n; ++j) phase_[j] = std::polar(1.0 / static_cast<double>(n), -k[j] * k[j] * dt);
        phase_dt_ = dt;
      }
      cplx* d = fft.data();
      for (std::size_t j = 0; j < n; ++j) d[j] *= phase_[j];
      fft.backward();
      std::copy(d, d + n, psi.begin());
      return;
    }
    crank_nicolson(psi, dt);
  }

  /// One Strang step; returns the rotation rate of the new state.
  double step(std::vector<cplx>& psi, double dt) {
    nonlinear(psi, 0.5 * dt);
    linear(psi, dt);
    return nonlinear(psi, 0.5 * dt);
  }

  /// Largest pointwise rotation rate |psi|^{p-2} + |mu| |psi|^{q-2}.
  [[nodiscard]] double max_rate(const std::vector<cplx>& psi) const {
    double m = 0;
    for (const auto& v : psi) {
      const double n2 = std::norm(v);
      m = std::max(m, detail::norm_power(n2, 0.5 * (params_.p - 2.0)) +
                          std::abs(params_.mu) * detail::norm_power(n2, 0.5 * (params_.q - 2.0)));
    }
    return m;
  }

  FieldMeasures& measures() { return measures_; }
  [[nodiscard]] const WaveGrid& grid() const { return grid_; }
  [[nodiscard]] const ModelParams& params() const { return params_; }

 private:
  // (V - i dt/2 S) psi+ = (V + i dt/2 S) psi with S the symmetric finite-volume
  // Laplacian; the outer ghost value -psi_{n-1} gives the boundary diagonal.
  void crank_nicolson(std::vector<cplx>& psi, double dt) {
    const auto& c = measures_.cells();
    const std::size_t n = psi.size();
    const cplx ih(0.0, 0.5 * dt);
    auto S_diag = [&](std::size_t j) {
      const double left = j > 0 ? c.face[j - 1] : 0.0;
      const double right = j + 1 < n ? c.face[j] : 2.0 * c.face[j];
      return -(left + right);
    };
    if (dt != cn_dt_) {
      // forward sweep of the Thomas algorithm depends on dt only
      cn_diag_.resize(n);
      cn_upper_.resize(n);
      cplx prev_upper = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const cplx lower = j > 0 ? -ih * c.face[j - 1] : 0.0;
        const cplx diag = c.volume[j] - ih * S_diag(j) - lower * prev_upper;
        cn_diag_[j] = diag;
        cn_upper_[j] = j + 1 < n ? (-ih * c.face[j]) / diag : 0.0;
        prev_upper = cn_upper_[j];
      }
      cn_dt_ = dt;
    }
    rhs_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = S_diag(j) * psi[j];
      if (j > 0) s += c.face[j - 1] * psi[j - 1];
      if (j + 1 < n) s += c.face[j] * psi[j + 1];
      rhs_[j] = c.volume[j] * psi[j] + ih * s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const cplx lower = j > 0 ? -ih * c.face[j - 1] : 0.0;
      const cplx prev = j > 0 ? rhs_[j - 1] : 0.0;
      rhs_[j] = (rhs_[j] - lower * prev) / cn_diag_[j];
    }
    for (std::size_t j = n; j-- > 0;) {
      if (j + 1 < n) rhs_[j] -= cn_upper_[j] * rhs_[j + 1];
    }
    psi = rhs_;
  }

  WaveGrid grid_;
  ModelParams params_;
  FieldMeasures measures_;
  double phase_dt_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<cplx> phase_;
  double cn_dt_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<cplx> cn_diag_, cn_upper_, rhs_;
};

enum class Outcome { Global, BlowUp, Undecided };

constexpr std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Global: return "Global";
    case Outcome::BlowUp: return "BlowUp";
    case Outcome::Undecided: return "Undecided";
  }
  return "?";
}

struct EvolveOptions {
  double dt = 1e-3;
  double T = 1.0;
  std::size_t sample_every = 5;
  /// Shrink dt as grad2 grows (dt0 * min(1, 2 g0 / g2), updated at samples)
  /// and keep the nonlinear phase per step below max_phase (updated every step).
  bool adaptive = true;
  double max_phase = 0.01;
  /// Energy drift, relative to max(|E0|, |grad psi0|^2), beyond which the run
  /// is no longer resolved in time.
  double energy_guard = 1e-3;
  double grad_growth = 1e6;        ///< G signal: grad2 above this multiple of its initial value
  double dt_floor = 1e-12;         ///< D signal
  double tail_tol = 1e-6;          ///< periodic: spectral fraction above 2/3 k_max counted as lost resolution
  double radial_tail_tol = 1e-2;   ///< radial: (h / local length scale)^2 at the origin
  std::size_t virial_window = 8;   ///< V signal: trailing resolved samples with P < 0 and f'' < 0
  std::size_t max_steps = 20'000'000;
  /// Called at every sample with (t, psi); the measures belong to the run.
  std::function<void(double, const std::vector<cplx>&, FieldMeasures&)> monitor;
};

struct EvolutionTrace {
  std::vector<double> times, mass2, energy, grad2, virial, pohozaev, dts, tail;
  Outcome outcome = Outcome::Undecided;
  double t_end = 0;
  std::optional<double> blowup_time;
  std::vector<std::string> signals;  ///< signals active when the run stopped
  std::string diagnostics;
  std::size_t steps = 0;
  WaveField final_state;

  [[nodiscard]] double mass_drift() const {
    double d = 0;
    for (double m : mass2) d = std::max(d, std::abs(m - mass2.front()) / mass2.front());
    return d;
  }
  [[nodiscard]] double energy_drift() const {
    double d = 0;
    const double e0 = energy.front();
    for (double e : energy) d = std::max(d, std::abs(e - e0) / std::max(std::abs(e0), 1e-300));
    return d;
  }
};

/// Resolution-capped version of the grad2 threshold: once |grad psi|^2
/// exceeds half the mass times (k_max / 3)^2 the grid can no longer follow the
/// concentration, whatever the multiple of the initial value.
inline double grad_threshold(const WaveGrid& grid, double g0, double m0, double growth) {
  const double kc = grid.k_max() / 3.0;
  return std::min(growth * g0, 0.5 * m0 * kc * kc);
}

namespace detail {

/// f'' at the middle of three possibly unevenly spaced samples.
inline double second_difference(double t0, double t1, double t2, double f0, double f1, double f2) {
  const double h0 = t1 - t0, h1 = t2 - t1;
  return 2.0 * (h0 * f2 - (h0 + h1) * f1 + h1 * f0) / (h0 * h1 * (h0 + h1));
}

/// P < 0 and f concave on each of the `window` samples ending at index end - 1.
inline bool virial_signal(const EvolutionTrace& tr, std::size_t end, std::size_t window) {
  if (window < 3 || end < window + 1 || end > tr.times.size()) return false;
  for (std::size_t i = end - window; i + 1 < end; ++i) {
    if (!(tr.pohozaev[i] < 0.0)) return false;
    const double f2 = second_difference(tr.times[i - 1], tr.times[i], tr.times[i + 1], tr.virial[i - 1],
                                        tr.virial[i], tr.virial[i + 1]);
    if (!(f2 < 0.0)) return false;
  }
  return tr.pohozaev[end - 1] < 0.0;
}

}  // namespace detail

inline EvolutionTrace evolve(const WaveField& initial, const ModelParams& params, const EvolveOptions& opt) {
  params.validate();
  initial.grid.validate();
  if (initial.values.size() != initial.grid.points) fail(ErrorCategory::validation, "wave field size differs from its grid");
  if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) fail(ErrorCategory::validation, "evolve needs dt > 0 and T >= 0");
  if (opt.sample_every == 0) fail(ErrorCategory::validation, "sample_every must be positive");
  for (const auto& v : initial.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) fail(ErrorCategory::validation, "initial field is not finite");

  Propagator prop(initial.grid, params);
  auto& meas = prop.measures();
  std::vector<cplx> psi = initial.values;
  EvolutionTrace tr;

  double t = 0;
  double dt_base = opt.dt;  // grad2 rule, refreshed at samples
  double rate = prop.max_rate(psi);
  auto step_dt = [&] {
    if (!opt.adaptive || !(rate > 0.0)) return dt_base;
    return std::min(dt_base, opt.max_phase / rate);
  };
  auto record = [&] {
    const auto trip = meas.triple(psi, params);
    tr.times.push_back(t);
    tr.mass2.push_back(trip.mass2);
    tr.energy.push_back(energy(trip, params));
    tr.grad2.push_back(trip.grad2);
    tr.virial.push_back(meas.virial(psi));
    tr.pohozaev.push_back(pohozaev(trip, params));
    tr.dts.push_back(step_dt());
    tr.tail.push_back(meas.resolution_tail(psi));
    if (opt.monitor) opt.monitor(t, psi, meas);
  };

  record();
  const double g0 = tr.grad2.front(), m0 = tr.mass2.front(), e0 = tr.energy.front();
  const double gcap = grad_threshold(initial.grid, g0, m0, opt.grad_growth);
  const double tail_tol = initial.grid.geometry == Geometry::periodic ? opt.tail_tol : opt.radial_tail_tol;
  const double e_scale = std::max(std::abs(e0), g0);

  bool stopped = false;
  std::size_t since_sample = 0;
  while (t < opt.T) {
    if (tr.steps >= opt.max_steps) {
      tr.outcome = Outcome::Undecided;
      tr.diagnostics = "step budget exhausted at t = " + std::to_string(t);
      stopped = true;
      break;
    }
    const double dt = step_dt();
    const bool last = opt.T - t <= dt;
    rate = prop.step(psi, last ? opt.T - t : dt);
    t = last ? opt.T : t + dt;
    ++tr.steps;
    const bool d_sig = opt.adaptive && step_dt() < opt.dt_floor;
    if (++since_sample < opt.sample_every && !last && !d_sig) continue;
    since_sample = 0;
    record();
    if (opt.adaptive) dt_base = opt.dt * std::min(1.0, 2.0 * g0 / tr.grad2.back());

    const std::size_t n = tr.times.size();
    bool finite = true;
    for (double x : {tr.grad2.back(), tr.energy.back(), tr.mass2.back()}) finite = finite && std::isfinite(x);
    const bool grad_sig = tr.grad2.back() >= gcap;
    const bool lost = !finite || grad_sig || tr.tail.back() > tail_tol ||
                      std::abs(tr.energy.back() - e0) > opt.energy_guard * e_scale;
    if (!lost && !d_sig) continue;

    // the current sample is no longer trusted; the virial signal is read off
    // the resolved part of the trace
    const bool v_sig = detail::virial_signal(tr, n - 1, opt.virial_window);
    const bool g_sig = lost;
    std::ostringstream os;
    if (int(g_sig) + int(v_sig) + int(d_sig) >= 2) {
      tr.outcome = Outcome::BlowUp;
      tr.blowup_time = t;
      os << "blow-up at t = " << t;
    } else {
      tr.outcome = Outcome::Undecided;
      os << "resolution exhausted at t = " << t << " without a second signal";
    }
    if (g_sig) tr.signals.emplace_back("grad2");
    if (v_sig) tr.signals.emplace_back("virial");
    if (d_sig) tr.signals.emplace_back("dt");
    os << ": grad2 / initial = " << tr.grad2.back() / g0 << " (cap " << gcap / g0 << "), tail = " << tr.tail.back()
       << ", energy drift = " << std::abs(tr.energy.back() - e0) / e_scale << ", last resolved P = " << tr.pohozaev[n - 2]
       << ", dt = " << step_dt();
    tr.diagnostics = os.str();
    stopped = true;
    break;
  }
  if (!stopped) {
    tr.outcome = Outcome::Global;
    std::ostringstream os;
    os << "reached T = " << opt.T << " in " << tr.steps << " steps; max grad2 / initial = "
       << *std::max_element(tr.grad2.begin(), tr.grad2.end()) / g0;
    tr.diagnostics = os.str();
  }
  tr.t_end = t;
  tr.final_state = {initial.grid, std::move(psi)};
  return tr;
}

/// Discrete second derivative of f(t) against 8 P(psi(t)).
struct VirialReport {
  std::size_t samples = 0;
  double max_rel = 0;   ///< max |f'' - 8P| / (1 + |8P|)
  double mean_rel = 0;
  double worst_time = 0;
  std::size_t negative_samples = 0;  ///< samples with P < -delta
  bool concave_when_negative = true; ///< f'' < 0 at every such sample
};

inline VirialReport virial_check(const EvolutionTrace& tr, double delta = 0.0) {
  VirialReport rep;
  const std::size_t n = tr.times.size();
  if (n < 3) fail(ErrorCategory::validation, "virial check needs at least three samples");
  double sum = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // a truncated final step leaves one short interval; the difference there is rounding noise
    const double h0 = tr.times[i] - tr.times[i - 1], h1 = tr.times[i + 1] - tr.times[i];
    if (std::abs(h1 - h0) > 0.1 * std::max(h0, h1)) continue;
    const double f2 = detail::second_difference(tr.times[i - 1], tr.times[i], tr.times[i + 1], tr.virial[i - 1],
                                                tr.virial[i], tr.virial[i + 1]);
    const double p8 = 8.0 * tr.pohozaev[i];
    const double rel = std::abs(f2 - p8) / (1.0 + std::abs(p8));
    ++rep.samples;
    sum += rel;
    if (rel > rep.max_rel) {
      rep.max_rel = rel;
      rep.worst_time = tr.times[i];
    }
    if (tr.pohozaev[i] < -delta) {
      ++rep.negative_samples;
      if (!(f2 < 0.0)) rep.concave_when_negative = false;
    }
  }
  if (rep.samples == 0) fail(ErrorCategory::validation, "virial check found no evenly spaced sample triple");
  rep.mean_rel = sum / static_cast<double>(rep.samples);
  return rep;
}

enum class Prediction { Global, BlowUp, NoPrediction };

constexpr std::string_view to_string(Prediction p) {
  switch (p) {
    case Prediction::Global: return "Global";
    case Prediction::BlowUp: return "BlowUp";
    case Prediction::NoPrediction: return "NoPrediction";
  }
  return "?";
}

struct DatumPrediction {
  Prediction prediction = Prediction::NoPrediction;
  std::optional<double> t_u;
  double energy = 0;
  double level = 0;  ///< inf of E over the P- component, as supplied
  double pohozaev = 0;
  std::string reason;
};

/// Global existence versus blow-up from the sign of the fiber maximum t_u,
/// valid when E(u) lies below the P- level in the three regimes with an
/// established classifier (mixed with its mass condition, the L2-critical
/// perturbation, and the defocusing supercritical case).
inline DatumPrediction classify_datum(const WaveField& u, const ModelParams& params, const GNPair& gn, double level) {
  params.validate();
  FieldMeasures meas(u.grid);
  const auto tr = meas.triple(u.values, params);
  DatumPrediction out;
  out.energy = energy(tr, params);
  out.pohozaev = pohozaev(tr, params);
  out.level = level;

  std::optional<ThresholdReport> cond;
  const auto regime = classify(params);
  switch (regime.tag) {
    case RegimeTag::mixed_focusing: cond = cond_mixed(params, gn.q, gn.p); break;
    case RegimeTag::critical_perturbation: cond = cond_critical(params, gn.q, gn.p); break;
    case RegimeTag::supercritical_defocusing: cond = cond_defocusing(params, gn.q, gn.p); break;
    default: break;
  }
  if (!cond) {
    out.reason = "no established classifier in regime " + std::string(to_string(regime.tag));
    return out;
  }
  if (!cond->condition_holds) {
    out.reason = cond->name + " fails for this mass";
    return out;
  }
  if (!(out.energy < level)) {
    out.reason = "E(u) is not below the P- level";
    return out;
  }
  const auto cp = fiber_critical_points(tr, params);
  if (!cp.t_u) {
    out.reason = "fiber map has no maximum";
    return out;
  }
  out.t_u = *cp.t_u;
  if (std::abs(*cp.t_u) < 1e-10) {
    out.reason = "t_u = 0 to working precision";
    return out;
  }
  if (*cp.t_u > 0.0) {
    out.prediction = Prediction::Global;
    out.reason = "t_u > 0";
    return out;
  }
  // every field on a bounded box has a finite second moment
  if (!std::isfinite(meas.virial(u.values))) {
    out.reason = "second moment is not finite";
    return out;
  }
  out.prediction = Prediction::BlowUp;
  out.reason = "t_u < 0";
  return out;
}

struct PredictionResult {
  DatumPrediction prediction;
  EvolutionTrace trace;
  /// Empty when there is nothing to compare (no prediction or undecided run).
  std::optional<bool> agree;
};

inline PredictionResult prediction_experiment(const WaveField& u, const ModelParams& params, const GNPair& gn,
                                              double level, const EvolveOptions& opt) {
  PredictionResult r;
  r.prediction = classify_datum(u, params, gn, level);
  if (r.prediction.prediction == Prediction::NoPrediction) return r;
  r.trace = evolve(u, params, opt);
  if (r.trace.outcome == Outcome::Undecided) return r;
  const bool blew = r.trace.outcome == Outcome::BlowUp;
  r.agree = blew == (r.prediction.prediction == Prediction::BlowUp);
  return r;
}

/// Box adapted to a stationary state with multiplier lambda: its width is
/// of order 1 / sqrt|lambda|.
inline WaveGrid stationary_wave_grid(int dim, double lambda, std::size_t points = 0) {
  WaveGrid g = default_wave_grid(dim);
  if (points) g.points = points;
  g.extent = 40.0 / std::sqrt(std::abs(lambda));
  return g;
}

/// H1 inner product <f, g> = int conj(f) g + conj(grad f) . grad g.
inline cplx h1_inner(const std::vector<cplx>& f, const std::vector<cplx>& g, FieldMeasures& meas) {
  const auto& grid = meas.grid();
  const std::size_t n = f.size();
  cplx s = 0;
  if (grid.geometry == Geometry::periodic) {
    auto& fft = meas.fft();
    std::copy(f.begin(), f.end(), fft.data());
    fft.forward();
    std::vector<cplx> fh(fft.data(), fft.data() + n);
    std::copy(g.begin(), g.end(), fft.data());
    fft.forward();
    const auto& k = meas.k();
    for (std::size_t j = 0; j < n; ++j) s += (1.0 + k[j] * k[j]) * std::conj(fh[j]) * fft.data()[j];
    return s * grid.step() / static_cast<double>(n);
  }
  const auto& c = meas.cells();
  for (std::size_t j = 0; j < n; ++j) s += c.volume[j] * std::conj(f[j]) * g[j];
  for (std::size_t j = 0; j + 1 < n; ++j) s += c.face[j] * std::conj(f[j + 1] - f[j]) * (g[j + 1] - g[j]);
  s += 2.0 * c.face[n - 1] * std::conj(f[n - 1]) * g[n - 1];
  return s * sphere_area(grid.dim);
}

inline double h1_norm(const std::vector<cplx>& f, FieldMeasures& meas) { return std::sqrt(h1_inner(f, f, meas).real()); }

struct OrbitalDistance {
  double distance = 0;  ///< min over phase (and grid shift) of |psi - e^{i theta} g(. - y)|_{H1}
  double theta = 0;
  double shift = 0;
};

/// Periodic grids: the optimal shift is the peak of the H1 cross-correlation,
/// computed with one FFT; the optimal phase is the argument at the peak.
/// Radial grids: phase only.
inline OrbitalDistance orbital_distance(const std::vector<cplx>& psi, const std::vector<cplx>& g, FieldMeasures& meas) {
  const auto& grid = meas.grid();
  const std::size_t n = psi.size();
  const double npsi = h1_inner(psi, psi, meas).real(), ng = h1_inner(g, g, meas).real();
  OrbitalDistance out;
  cplx best = 0;
  if (grid.geometry == Geometry::periodic) {
    auto& fft = meas.fft();
    const auto& k = meas.k();
    std::copy(psi.begin(), psi.end(), fft.data());
    fft.forward();
    std::vector<cplx> ph(fft.data(), fft.data() + n);
    std::copy(g.begin(), g.end(), fft.data());
    fft.forward();
    cplx* d = fft.data();
    for (std::size_t j = 0; j < n; ++j) d[j] = (1.0 + k[j] * k[j]) * std::conj(ph[j]) * d[j];
    fft.forward();
    const double scale = grid.step() / static_cast<double>(n);
    std::size_t arg = 0;
    for (std::size_t m = 0; m < n; ++m)
      if (std::abs(d[m]) > std::abs(d[arg])) arg = m;
    best = d[arg] * scale;
    const auto m = static_cast<long>(arg <= n / 2 ? static_cast<long>(arg) : static_cast<long>(arg) - static_cast<long>(n));
    out.shift = static_cast<double>(m) * grid.step();
  } else {
    best = h1_inner(psi, g, meas);
  }
  // |psi - e^{i theta} g|^2 = |psi|^2 + |g|^2 - 2 Re(e^{i theta} <psi, g>)
  out.theta = -std::arg(best);
  out.distance = std::sqrt(std::max(0.0, npsi + ng - 2.0 * std::abs(best)));
  return out;
}

/// Random smooth perturbation: a few Gaussian bumps with complex weights on
/// the scale of the state, rescaled to H1 size eps |state|_{H1}, added to the
/// state, and projected back to mass a.
inline WaveField perturb(const WaveField& state, double eps, double a, std::mt19937_64& rng) {
  FieldMeasures meas(state.grid);
  const auto& grid = state.grid;
  const double width = std::sqrt(meas.virial(state.values) / meas.mass2(state.values));
  std::uniform_real_distribution<double> centre(-width, width), scale(0.5 * width, 2.0 * width);
  std::normal_distribution<double> weight(0.0, 1.0);
  std::vector<cplx> xi(grid.points, 0.0);
  for (int b = 0; b < 4; ++b) {
    const double c = grid.geometry == Geometry::periodic ? centre(rng) : 0.0;
    const double w = scale(rng);
    const cplx amp(weight(rng), weight(rng));
    for (std::size_t j = 0; j < grid.points; ++j) {
      const double x = (grid.coord(j) - c) / w;
      xi[j] += amp * std::exp(-0.5 * x * x);
    }
  }
  if (grid.geometry == Geometry::radial) xi.back() = 0.0;
  const double k = eps * h1_norm(state.values, meas) / h1_norm(xi, meas);
  WaveField out = state;
  for (std::size_t j = 0; j < grid.points; ++j) out.values[j] += k * xi[j];
  normalize_mass(out, a);
  return out;
}

struct StabilityTrial {
  std::uint64_t seed = 0;
  double initial_distance = 0;  ///< relative to |gs|_{H1}
  double max_distance = 0;      ///< sup over sampled t, relative
  Outcome outcome = Outcome::Undecided;
  std::string diagnostics;
};

struct StabilityReport {
  double eps = 0;
  double T = 0;
  double gs_h1 = 0;
  std::vector<StabilityTrial> trials;
  double max_distance = 0;  ///< max over trials, relative to |gs|_{H1}
  bool blowup_seen = false;
};

/// Orbital-stability experiment around a computed ground state. Distances are
/// reported relative to |gs|_{H1}, so they compare directly with eps.
inline StabilityReport stability_experiment(const GroundStateResult& gs, const ModelParams& params, double eps,
                                            double T, std::size_t trials, std::uint64_t seed,
                                            EvolveOptions opt = {}, std::optional<WaveGrid> grid = {}) {
  if (!(eps >= 0.0)) fail(ErrorCategory::validation, "perturbation size must be non-negative");
  const WaveGrid g = grid ? *grid : stationary_wave_grid(params.dim, gs.lambda);
  WaveField base = wave_from_radial(gs.profile, g);
  normalize_mass(base, params.a);
  FieldMeasures meas(g);
  StabilityReport rep;
  rep.eps = eps;
  rep.T = T;
  rep.gs_h1 = h1_norm(base.values, meas);
  opt.T = T;
  for (std::size_t i = 0; i < trials; ++i) {
    StabilityTrial trial;
    trial.seed = seed + i;
    std::mt19937_64 rng(trial.seed);
    const WaveField init = eps > 0.0 ? perturb(base, eps, params.a, rng) : base;
    trial.initial_distance = orbital_distance(init.values, base.values, meas).distance / rep.gs_h1;
    double worst = 0;
    EvolveOptions o = opt;
    o.monitor = [&](double, const std::vector<cplx>& psi, FieldMeasures& m) {
      worst = std::max(worst, orbital_distance(psi, base.values, m).distance);
    };
    const auto tr = evolve(init, params, o);
    trial.max_distance = worst / rep.gs_h1;
    trial.outcome = tr.outcome;
    trial.diagnostics = tr.diagnostics;
    rep.blowup_seen = rep.blowup_seen || tr.outcome == Outcome::BlowUp;
    rep.max_distance = std::max(rep.max_distance, trial.max_distance);
    rep.trials.push_back(std::move(trial));
  }
  return rep;
}

}  // namespace nlsmix

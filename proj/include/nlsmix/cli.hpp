#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nlsmix/criteria.hpp"
#include "nlsmix/dynamics.hpp"
#include "nlsmix/errors.hpp"
#include "nlsmix/fiber.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/io.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/solvers.hpp"
#include "nlsmix/wave.hpp"

namespace nlsmix {

/// What a command produced: the envelope, an optional table (written when the
/// output format is csv) and a few human-readable lines.
struct RunOutput {
  ResultEnvelope envelope;
  std::optional<std::string> csv;
  std::vector<std::string> summary;
};

/// Runs `fn(i)` for i in [0, n) on at most `jobs` threads. Results must be
/// written to preallocated slots so the caller's order does not depend on
/// scheduling.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline unsigned default_jobs() { return std::max(1u, std::min(4u, std::thread::hardware_concurrency())); }

namespace detail {

template <typename T>
T opt_or(const json& o, const char* key, T fallback) {
  if (!o.contains(key) || o.at(key).is_null()) return fallback;
  try {
    return o.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCategory::validation, std::string("option '") + key + "': " + e.what());
  }
}

inline const ModelParams& need_params(const ExperimentConfig& c) {
  if (!c.params) fail(ErrorCategory::validation, "command '" + c.command + "' needs model parameters");
  c.params->validate();
  return *c.params;
}

inline json gn_provenance(const GNConstants& g, bool cache_hit) {
  json j = gn_to_json(g);
  j["kind"] = "gn";
  j["cached"] = cache_hit;
  return j;
}

inline GNPair cached_pair(const ModelParams& params, GnCache& cache, ResultEnvelope& env) {
  bool hq = false, hp = false;
  GNPair gn{cache.get(params.dim, params.q, &hq), cache.get(params.dim, params.p, &hp)};
  env.provenance.push_back(gn_provenance(gn.q, hq));
  env.provenance.push_back(gn_provenance(gn.p, hp));
  return gn;
}

inline json report_to_json(const ThresholdReport& r) {
  return json{{"name", r.name}, {"holds", r.condition_holds}, {"boundary", r.boundary}, {"lhs", r.lhs},
              {"rhs", r.rhs},   {"margin", r.margin},         {"tolerance", kBoundaryTolerance}};
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json state_to_json(const GroundStateResult& g) {
  return json{{"branch", std::string(to_string(g.branch))},
              {"lambda", g.lambda},
              {"energy", g.energy_level},
              {"grad_norm", g.grad_norm()},
              {"fiber_class", std::string(to_string(g.fiber_class))},
              {"pohozaev_residual", g.pohozaev_residual},
              {"ode_residual", g.ode_residual},
              {"mass_error", g.mass_error},
              {"iterations", g.iterations},
              {"grid", json{{"radius", g.profile.grid.radius}, {"points", g.profile.grid.points}}}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCategory::io, "write to " + path + " failed");
}

inline std::string profile_csv(const RadialField& u) {
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"r", "u"});
  for (std::size_t j = 0; j < u.size(); ++j) w.row(u.grid.r(j), u.values[j]);
  return os.str();
}

inline std::string trace_csv(const EvolutionTrace& tr) {
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"t", "mass2", "energy", "grad2", "virial", "pohozaev"});
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    w.row(tr.times[i], tr.mass2[i], tr.energy[i], tr.grad2[i], tr.virial[i], tr.pohozaev[i]);
  return os.str();
}

inline GroundStateResult solve_branch(const ModelParams& params, Branch branch, const GNPair& gn,
                                      const std::string& method) {
  if (method == "shooting") return solve_prescribed_mass(params, branch, gn);
  if (method == "flow") {
    if (branch != Branch::LocalMin) fail(ErrorCategory::validation, "the gradient flow only computes the local minimizer");
    check_branch_admissible(params, branch, gn);
    const RadialGrid grid{params.dim, 20.0, 8192};
    return gradient_flow_local_min(params, local_min_seed(params, grid), FlowConfig{}, gn, nullptr);
  }
  fail(ErrorCategory::validation, "method must be shooting or flow");
}

/// Linear interpolation of a tabulated radial profile (r, u) or a complex
/// field (x, re, im) onto a wave grid; zero outside the table.
inline WaveField wave_from_table(const CsvTable& t, const WaveGrid& grid) {
  const auto* r = t.column("r");
  const auto* u = t.column("u");
  const auto* x = t.column("x");
  const auto* re = t.column("re");
  const auto* im = t.column("im");
  const bool radial = r && u;
  if (!radial && !(x && re)) fail(ErrorCategory::validation, "initial data CSV needs columns (r, u) or (x, re[, im])");
  const auto& xs = radial ? *r : *x;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) fail(ErrorCategory::validation, "initial data abscissae must increase");
  if (xs.size() < 2) fail(ErrorCategory::validation, "initial data needs at least two rows");
  auto interp = [&](const std::vector<double>& ys, double at) {
    if (at < xs.front() || at > xs.back()) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), at);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - xs.begin()), xs.size() - 1);
    const double x0 = xs[k - 1], x1 = xs[k];
    const double w = (at - x0) / (x1 - x0);
    return (1.0 - w) * ys[k - 1] + w * ys[k];
  };
  WaveField f;
  f.grid = grid;
  f.values.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double c = grid.coord(j);
    if (radial) f.values[j] = interp(*u, std::abs(c));
    else f.values[j] = cplx(interp(*re, c), im ? interp(*im, c) : 0.0);
  }
  return f;
}

struct InitialData {
  WaveField field;
  std::optional<GroundStateResult> state;  ///< when the preset is a computed state
};

/// Initial datum from options: "init" is a CSV path or one of the presets
/// gaussian, sech, localmin, mountainpass, unique; "scale" applies s * u.
inline InitialData initial_data(const json& o, const ModelParams& params, const GNPair& gn, ResultEnvelope& env) {
  const std::string init = opt_or<std::string>(o, "init", "gaussian");
  WaveGrid grid = default_wave_grid(params.dim);
  if (o.contains("points")) grid.points = opt_or<std::size_t>(o, "points", grid.points);
  InitialData d;
  if (init == "localmin" || init == "mountainpass" || init == "unique") {
    d.state = solve_prescribed_mass(params, parse_branch(init), gn);
    grid = stationary_wave_grid(params.dim, d.state->lambda, grid.points);
    env.provenance.push_back(json{{"kind", "ground_state"},
                                  {"branch", init},
                                  {"lambda", d.state->lambda},
                                  {"pohozaev_residual", d.state->pohozaev_residual},
                                  {"ode_residual", d.state->ode_residual}});
  }
  if (o.contains("extent")) grid.extent = opt_or<double>(o, "extent", grid.extent);
  grid.validate();
  if (d.state) {
    d.field = wave_from_radial(d.state->profile, grid);
  } else if (init == "gaussian") {
    d.field = gaussian_wave(grid, 1.0, opt_or<double>(o, "width", 1.0));
  } else if (init == "sech") {
    d.field = sech_wave(grid, 1.0, opt_or<double>(o, "width", 1.0));
  } else {
    d.field = wave_from_table(read_csv(init), grid);
  }
  if (!o.contains("normalize") || opt_or<bool>(o, "normalize", true)) normalize_mass(d.field, params.a);
  if (const double s = opt_or<double>(o, "scale", 0.0); s != 0.0) d.field = dilate(d.field, s);
  return d;
}

inline EvolveOptions evolve_options(const json& o) {
  EvolveOptions e;
  e.dt = opt_or<double>(o, "dt", e.dt);
  e.T = opt_or<double>(o, "T", e.T);
  e.sample_every = opt_or<std::size_t>(o, "sample_every", e.sample_every);
  e.adaptive = opt_or<bool>(o, "adaptive", e.adaptive);
  return e;
}

inline json trace_summary(const EvolutionTrace& tr) {
  json j{{"outcome", std::string(to_string(tr.outcome))},
         {"t_end", tr.t_end},
         {"blowup_time", optional_number(tr.blowup_time)},
         {"signals", tr.signals},
         {"diagnostics", tr.diagnostics},
         {"steps", tr.steps},
         {"samples", tr.times.size()},
         {"mass_drift", tr.mass_drift()},
         {"energy_drift", tr.energy_drift()},
         {"initial", json{{"mass2", tr.mass2.front()}, {"energy", tr.energy.front()}, {"grad2", tr.grad2.front()},
                          {"pohozaev", tr.pohozaev.front()}}}};
  if (tr.times.size() >= 3) {
    try {
      const auto v = virial_check(tr);
      j["virial"] = json{{"max_rel", v.max_rel}, {"mean_rel", v.mean_rel}, {"samples", v.samples}};
    } catch (const Error&) {
    }
  }
  return j;
}

/// inf of E over the P- component as the solvers compute it: the mountain-pass
/// level in the mixed regime, the ground-state level where it is unique.
inline std::optional<double> pminus_level(const ModelParams& params, const GNPair& gn, ResultEnvelope& env) {
  const auto tag = classify(params).tag;
  std::optional<Branch> b;
  if (tag == RegimeTag::mixed_focusing) b = Branch::MountainPass;
  if (tag == RegimeTag::critical_perturbation || tag == RegimeTag::supercritical_defocusing) b = Branch::Unique;
  if (!b) return std::nullopt;
  const auto st = solve_prescribed_mass(params, *b, gn);
  env.provenance.push_back(json{{"kind", "level"},
                                {"branch", std::string(to_string(*b))},
                                {"energy", st.energy_level},
                                {"pohozaev_residual", st.pohozaev_residual}});
  return st.energy_level;
}

// ---------------------------------------------------------------------------
// commands

inline void cmd_gn(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& o = c.options;
  const int dim = c.params ? c.params->dim : opt_or<int>(o, "N", 1);
  const double p = c.params ? static_cast<double>(c.params->p) : exponent_from_json(o.value("p", json(4))).value;
  RadialGrid grid = default_soliton_grid(dim);
  grid.points = opt_or<std::size_t>(o, "grid_points", grid.points);
  grid.radius = opt_or<double>(o, "radius", grid.radius);
  grid.validate();
  bool hit = false;
  const auto g = cache.get(dim, p, grid, &hit);
  out.envelope.provenance.push_back(gn_provenance(g, hit));
  out.envelope.payload = gn_to_json(g);
  out.summary.push_back("C_{" + std::to_string(dim) + "," + format_double(p) + "} = " + format_double(g.c_np));
  out.summary.push_back("|w|_2 = " + format_double(g.mass_w) + ", residual " + format_double(g.residual));
  if (g.abar_n) out.summary.push_back("critical mass = " + format_double(*g.abar_n));
}

inline json criteria_payload(const ModelParams& params, const GNPair& gn, const json& o) {
  const auto regime = classify(params);
  json j{{"regime", std::string(to_string(regime.tag))}, {"ordering", std::string(to_string(regime.ordering))}};
  json conds = json::array();
  const auto ord = regime.ordering;
  if (ord == ExponentOrdering::mixed && params.mu >= 0.0) conds.push_back(report_to_json(cond_mixed(params, gn.q, gn.p)));
  if (ord == ExponentOrdering::critical_lower && params.mu >= 0.0)
    conds.push_back(report_to_json(cond_critical(params, gn.q, gn.p)));
  if ((ord == ExponentOrdering::mixed || ord == ExponentOrdering::critical_lower) && params.mu <= 0.0)
    conds.push_back(report_to_json(cond_defocusing(params, gn.q, gn.p)));
  j["conditions"] = conds;
  if (ord == ExponentOrdering::mixed && params.mu > 0.0) {
    j["mu_star"] = mu_star(params, gn.q, gn.p);
    if (const auto h = h_roots(params, gn.q, gn.p)) {
      j["h"] = json{{"r0", h->r0},     {"r1", h->r1},       {"tbar", h->tbar}, {"hmax", h->hmax},
                    {"local_min_level", h->local_min_level}, {"log_r0", h->log_r0}, {"log_r1", h->log_r1}};
      const auto cm = cond_mixed(params, gn.q, gn.p);
      if (cm.condition_holds) {
        const auto g = blowup_bound_M(params, gn.q, gn.p);
        j["blowup_bound"] = json{{"r2", g.r2}, {"r3", g.r3}, {"M", g.m_bound}};
      }
    } else {
      j["h"] = nullptr;
    }
    if (o.contains("a_tilde")) {
      const double at = opt_or<double>(o, "a_tilde", params.a);
      const double rho = opt_or<double>(o, "rho", 0.01);
      j["stability_window"] = json{{"a_tilde", at}, {"rho", rho}, {"mu_tilde", stability_window(at, rho, params, gn.q, gn.p)}};
    }
  }
  return j;
}

inline void cmd_criteria(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto gn = cached_pair(params, cache, out.envelope);
  out.envelope.payload = criteria_payload(params, gn, c.options);
  const auto& j = out.envelope.payload;
  out.summary.push_back("regime " + j["regime"].get<std::string>());
  for (const auto& r : j["conditions"])
    out.summary.push_back(r["name"].get<std::string>() + ": " + (r["holds"].get<bool>() ? "holds" : "fails") +
                          " (lhs " + format_double(r["lhs"].get<double>()) + ", rhs " +
                          format_double(r["rhs"].get<double>()) + ")");
  if (j["conditions"].empty()) out.summary.push_back("no existence condition applies in this regime");
}

inline void cmd_fiber(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  if (!o.contains("triple")) fail(ErrorCategory::validation, "fiber needs a triple g2,mq,mp,m2");
  const auto t = opt_or<std::vector<double>>(o, "triple", {});
  if (t.size() != 4) fail(ErrorCategory::validation, "triple must have four entries g2,mq,mp,m2");
  for (double v : t)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCategory::validation, "triple entries must be positive");
  const FiberTriple tr{t[0], t[1], t[2], t[3]};
  const auto cp = fiber_critical_points(tr, params);
  json j{{"energy", energy(tr, params)},
         {"pohozaev", pohozaev(tr, params)},
         {"psi_second", psi_second(tr, 0.0, params)},
         {"class", std::string(to_string(cp.class_at_zero))},
         {"s_u", optional_number(cp.s_u)},
         {"t_u", optional_number(cp.t_u)},
         {"c_u", optional_number(cp.c_u)},
         {"d_u", optional_number(cp.d_u)},
         {"minima", cp.minima},
         {"maxima", cp.maxima},
         {"tolerance", pohozaev_tolerance(tr)}};
  if (std::abs(tr.mass2 - params.a * params.a) > 1e-9 * params.a * params.a) j["mass_mismatch"] = tr.mass2 - params.a * params.a;
  if (opt_or<bool>(o, "check_gn", false)) {
    const auto gn = cached_pair(params, cache, out.envelope);
    j["gn_compatible"] = gn_compatible(tr, params, gn.q, gn.p);
  }
  const double s0 = opt_or<double>(o, "s_from", -3.0), s1 = opt_or<double>(o, "s_to", 3.0);
  const auto n = opt_or<std::size_t>(o, "samples", 201);
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"s", "psi", "dpsi"});
  for (const auto& s : sample_psi(tr, params, s0, s1, n)) w.row(s.s, s.psi, s.dpsi);
  if (const auto path = opt_or<std::string>(o, "plot_psi", ""); !path.empty()) write_text(path, os.str());
  out.csv = os.str();
  out.envelope.payload = j;
  if (cp.s_u) out.summary.push_back("s_u = " + format_double(*cp.s_u));
  if (cp.t_u) out.summary.push_back("t_u = " + format_double(*cp.t_u));
  out.summary.push_back("class at s = 0: " + j["class"].get<std::string>());
}

inline void cmd_ground_state(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  const auto branch = parse_branch(opt_or<std::string>(o, "branch", "unique"));
  const auto gn = cached_pair(params, cache, out.envelope);
  const auto method = opt_or<std::string>(o, "method", "shooting");
  const auto st = solve_branch(params, branch, gn, method);
  out.envelope.payload = state_to_json(st);
  out.envelope.payload["method"] = method;
  out.csv = profile_csv(st.profile);
  if (const auto path = opt_or<std::string>(o, "profile", ""); !path.empty()) write_text(path, *out.csv);
  out.summary.push_back(std::string(to_string(branch)) + ": lambda = " + format_double(st.lambda) +
                        ", E = " + format_double(st.energy_level) + ", class " + std::string(to_string(st.fiber_class)));
  out.summary.push_back("|grad u|_2 = " + format_double(st.grad_norm()) + ", Pohozaev residual " +
                        format_double(st.pohozaev_residual));
}

inline void cmd_mass_curve(const ExperimentConfig& c, GnCache&, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  const double from = opt_or<double>(o, "lambda_from", -100.0), to = opt_or<double>(o, "lambda_to", -1e-4);
  const auto steps = opt_or<std::size_t>(o, "steps", 41);
  const auto points = opt_or<std::size_t>(o, "points", 16384);
  const auto grid = log_lambda_grid(from, to, steps);
  std::vector<MassCurvePoint> pts(grid.size());
  parallel_for(grid.size(), opt_or<unsigned>(o, "jobs", default_jobs()),
               [&](std::size_t i) { pts[i] = mass_point(grid[i], params, points); });
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"lambda", "ok", "mass", "energy", "grad2", "fiber_class", "error"});
  std::size_t ok = 0, above = 0, below = 0;
  double mmin = std::numeric_limits<double>::infinity(), mmax = 0;
  for (const auto& p : pts) {
    w.row(p.lambda, p.ok, p.ok ? p.mass : NAN, p.ok ? p.energy : NAN, p.ok ? p.grad2 : NAN,
          p.ok ? std::string(to_string(p.fiber_class)) : std::string(), p.error);
    if (!p.ok) continue;
    ++ok;
    mmin = std::min(mmin, p.mass);
    mmax = std::max(mmax, p.mass);
    (p.mass > params.a ? above : below) += 1;
  }
  out.csv = os.str();
  out.envelope.payload = json{{"points", pts.size()},
                              {"solved", ok},
                              {"mass_min", ok ? json(mmin) : json(nullptr)},
                              {"mass_max", ok ? json(mmax) : json(nullptr)},
                              {"above_a", above},
                              {"below_a", below},
                              {"grid_points", points}};
  out.summary.push_back(std::to_string(ok) + "/" + std::to_string(pts.size()) + " shots solved; mass in [" +
                        format_double(mmin) + ", " + format_double(mmax) + "]");
}

inline void cmd_evolve(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  const std::string init = opt_or<std::string>(o, "init", "gaussian");
  GNPair gn;
  if (init == "localmin" || init == "mountainpass" || init == "unique") gn = cached_pair(params, cache, out.envelope);
  const auto d = initial_data(o, params, gn, out.envelope);
  const auto tr = evolve(d.field, params, evolve_options(o));
  out.envelope.payload = trace_summary(tr);
  out.envelope.payload["grid"] = json{{"geometry", d.field.grid.geometry == Geometry::periodic ? "periodic" : "radial"},
                                      {"extent", d.field.grid.extent},
                                      {"points", d.field.grid.points}};
  out.csv = trace_csv(tr);
  if (const auto path = opt_or<std::string>(o, "trace", ""); !path.empty()) write_text(path, *out.csv);
  out.summary.push_back(std::string(to_string(tr.outcome)) + ": " + tr.diagnostics);
  out.summary.push_back("mass drift " + format_double(tr.mass_drift()) + ", energy drift " +
                        format_double(tr.energy_drift()));
}

inline void cmd_classify(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  const auto gn = cached_pair(params, cache, out.envelope);
  const auto d = initial_data(o, params, gn, out.envelope);
  std::optional<double> level;
  if (o.contains("level")) level = opt_or<double>(o, "level", 0.0);
  else level = pminus_level(params, gn, out.envelope);
  json j;
  if (!level) {
    DatumPrediction none;
    none.reason = "no established classifier in regime " + std::string(to_string(classify(params).tag));
    j = json{{"prediction", "NoPrediction"}, {"reason", none.reason}};
  } else if (opt_or<bool>(o, "verify", false)) {
    const auto r = prediction_experiment(d.field, params, gn, *level, evolve_options(o));
    j = json{{"prediction", std::string(to_string(r.prediction.prediction))},
             {"reason", r.prediction.reason},
             {"t_u", optional_number(r.prediction.t_u)},
             {"energy", r.prediction.energy},
             {"level", *level},
             {"pohozaev", r.prediction.pohozaev}};
    if (r.prediction.prediction != Prediction::NoPrediction) {
      j["observed"] = trace_summary(r.trace);
      j["agree"] = r.agree ? json(*r.agree) : json(nullptr);
    }
  } else {
    const auto p = classify_datum(d.field, params, gn, *level);
    j = json{{"prediction", std::string(to_string(p.prediction))},
             {"reason", p.reason},
             {"t_u", optional_number(p.t_u)},
             {"energy", p.energy},
             {"level", *level},
             {"pohozaev", p.pohozaev}};
  }
  j["t_u_tolerance"] = 1e-10;
  out.envelope.payload = j;
  out.summary.push_back("prediction " + j["prediction"].get<std::string>() + " (" + j["reason"].get<std::string>() + ")");
  if (j.contains("observed"))
    out.summary.push_back("observed " + j["observed"]["outcome"].get<std::string>());
}

inline void cmd_stability(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& params = need_params(c);
  const auto& o = c.options;
  const auto gn = cached_pair(params, cache, out.envelope);
  const auto branch = parse_branch(opt_or<std::string>(o, "branch", "localmin"));
  const auto gs = solve_prescribed_mass(params, branch, gn);
  EvolveOptions e = evolve_options(o);
  const double T = opt_or<double>(o, "T", 50.0);
  const auto grid = stationary_wave_grid(params.dim, gs.lambda, opt_or<std::size_t>(o, "points", 2048));
  const auto rep = stability_experiment(gs, params, opt_or<double>(o, "eps", 1e-2), T,
                                        opt_or<std::size_t>(o, "trials", 5), c.seed, e, grid);
  json trials = json::array();
  for (const auto& t : rep.trials)
    trials.push_back(json{{"seed", t.seed},
                          {"initial_distance", t.initial_distance},
                          {"max_distance", t.max_distance},
                          {"outcome", std::string(to_string(t.outcome))},
                          {"diagnostics", t.diagnostics}});
  out.envelope.payload = json{{"state", state_to_json(gs)},
                              {"eps", rep.eps},
                              {"T", rep.T},
                              {"gs_h1", rep.gs_h1},
                              {"max_distance", rep.max_distance},
                              {"bound", 10.0 * rep.eps},
                              {"blowup_seen", rep.blowup_seen},
                              {"trials", trials}};
  out.summary.push_back("max orbital distance / |gs|_H1 = " + format_double(rep.max_distance) + " over " +
                        std::to_string(rep.trials.size()) + " trials (eps " + format_double(rep.eps) + ")");
}

inline std::vector<double> sweep_values(const json& o) {
  const double from = opt_or<double>(o, "from", 0.0), to = opt_or<double>(o, "to", 0.0);
  const auto steps = opt_or<std::size_t>(o, "steps", 0);
  const std::string scale = opt_or<std::string>(o, "scale", "log");
  std::vector<double> v;
  if (steps == 0) return v;
  if (steps == 1) return {from};
  if (scale == "log") {
    if (!(from > 0.0) || !(to > 0.0)) fail(ErrorCategory::validation, "log sweep needs positive endpoints");
    for (std::size_t i = 0; i < steps; ++i)
      v.push_back(std::exp(std::log(from) + (std::log(to) - std::log(from)) * static_cast<double>(i) /
                                                static_cast<double>(steps - 1)));
  } else if (scale == "linear") {
    for (std::size_t i = 0; i < steps; ++i)
      v.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1));
  } else {
    fail(ErrorCategory::validation, "sweep scale must be log or linear");
  }
  return v;
}

inline void cmd_sweep(const ExperimentConfig& c, GnCache& cache, RunOutput& out) {
  const auto& base = need_params(c);
  const auto& o = c.options;
  const std::string vary = opt_or<std::string>(o, "vary", "mu");
  const std::string table = opt_or<std::string>(o, "table", "criteria");
  if (vary != "mu" && vary != "q" && vary != "a") fail(ErrorCategory::validation, "vary must be mu, q or a");
  const auto values = sweep_values(o);
  const unsigned jobs = opt_or<unsigned>(o, "jobs", default_jobs());
  std::ostringstream os;
  CsvWriter w(os);
  std::size_t failed = 0;

  if (table == "criteria") {
    // one constant for p, one per distinct q
    bool hit = false;
    const auto gn_p = cache.get(base.dim, base.p, &hit);
    out.envelope.provenance.push_back(gn_provenance(gn_p, hit));
    std::vector<GNConstants> gq(values.size());
    if (vary != "q") {
      const auto g = cache.get(base.dim, base.q, &hit);
      out.envelope.provenance.push_back(gn_provenance(g, hit));
      std::fill(gq.begin(), gq.end(), g);
    }
    struct Row {
      bool ok = false, holds = false;
      std::string name, error;
      double lhs = NAN, rhs = NAN, margin = NAN, r0 = NAN, r1 = NAN, m_bound = NAN;
    };
    std::vector<Row> rows(values.size());
    parallel_for(values.size(), jobs, [&](std::size_t i) {
      Row& r = rows[i];
      try {
        ModelParams p = base;
        if (vary == "mu") p.mu = values[i];
        else if (vary == "a") p.a = values[i];
        else {
          p.q = Exponent(values[i]);
          gq[i] = cache.get(p.dim, p.q);
        }
        p.validate();
        const auto rep = regime_condition(p, gq[i], gn_p);
        r.name = rep.name;
        r.holds = rep.condition_holds;
        r.lhs = rep.lhs;
        r.rhs = rep.rhs;
        r.margin = rep.margin;
        if (ordering_of(p) == ExponentOrdering::mixed && p.mu > 0.0) {
          if (const auto h = h_roots(p, gq[i], gn_p)) {
            r.r0 = h->r0;
            r.r1 = h->r1;
          }
          if (rep.condition_holds) r.m_bound = blowup_bound_M(p, gq[i], gn_p).m_bound;
        }
        r.ok = true;
      } catch (const Error& e) {
        r.error = e.what();
      }
    });
    w.header({vary, "ok", "condition", "holds", "lhs", "rhs", "margin", "r0", "r1", "m_bound", "error"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      failed += !r.ok;
      w.row(values[i], r.ok, r.name, r.holds, r.lhs, r.rhs, r.margin, r.r0, r.r1, r.m_bound, r.error);
    }
  } else if (table == "asymptotics") {
    if (vary == "a") fail(ErrorCategory::validation, "asymptotic tables vary mu or q");
    std::vector<AsymptoticRow> rows(values.size());
    if (!values.empty()) {
      const auto ctx = sweep_context(base, vary == "mu" ? SweepVariable::mu_to_zero : SweepVariable::q_to_pbar);
      out.envelope.provenance.push_back(gn_provenance(ctx.gn_p, false));
      if (ctx.u0)
        out.envelope.provenance.push_back(json{{"kind", "reference_state"},
                                               {"mu", 0.0},
                                               {"energy", ctx.u0->energy_level},
                                               {"pohozaev_residual", ctx.u0->pohozaev_residual}});
      parallel_for(values.size(), jobs, [&](std::size_t i) { rows[i] = asymptotic_row(ctx, values[i]); });
    }
    w.header({vary, "ok", "m", "grad_tilde", "r0", "log_r0", "sigma", "hat_to_u0", "error"});
    for (const auto& r : rows) {
      failed += !r.ok;
      w.row(r.parameter, r.ok, r.ok ? r.m : NAN, r.ok ? r.grad_tilde : NAN, r.ok ? r.r0 : NAN, r.ok ? r.log_r0 : NAN,
            r.sigma, r.hat_to_u0, r.error);
    }
  } else {
    fail(ErrorCategory::validation, "sweep table must be criteria or asymptotics");
  }
  out.csv = os.str();
  out.envelope.payload = json{{"vary", vary}, {"table", table}, {"rows", values.size()}, {"failed", failed},
                              {"values", values}};
  out.summary.push_back(std::to_string(values.size()) + " rows, " + std::to_string(failed) + " failed");
}

}  // namespace detail

/// Dispatches a configuration. Errors are reported in the envelope
/// (status "error" plus category) rather than thrown, except I/O failures
/// while writing side files, which are reported the same way.
inline RunOutput run(const ExperimentConfig& config, GnCache& cache) {
  RunOutput out;
  out.envelope.config = config_to_json(config);
  out.envelope.started = utc_timestamp();
  try {
    const auto& cmd = config.command;
    if (cmd == "gn") detail::cmd_gn(config, cache, out);
    else if (cmd == "criteria") detail::cmd_criteria(config, cache, out);
    else if (cmd == "fiber") detail::cmd_fiber(config, cache, out);
    else if (cmd == "ground-state") detail::cmd_ground_state(config, cache, out);
    else if (cmd == "mass-curve") detail::cmd_mass_curve(config, cache, out);
    else if (cmd == "evolve") detail::cmd_evolve(config, cache, out);
    else if (cmd == "classify") detail::cmd_classify(config, cache, out);
    else if (cmd == "stability") detail::cmd_stability(config, cache, out);
    else if (cmd == "sweep") detail::cmd_sweep(config, cache, out);
    else fail(ErrorCategory::validation, "unknown command '" + cmd + "'");
  } catch (const Error& e) {
    out.envelope.status = "error";
    out.envelope.error_category = std::string(to_string(e.category()));
    out.envelope.message = e.detail();
    out.envelope.payload = json::object();
    out.csv.reset();
    out.summary = {std::string(e.what())};
  }
  out.envelope.finished = utc_timestamp();
  return out;
}

/// Exit status for a finished run: 0, or 2 + the error category index.
inline int exit_status(const RunOutput& out) {
  if (!out.envelope.error_category) return 0;
  for (int i = 0; i <= static_cast<int>(ErrorCategory::io); ++i) {
    const auto c = static_cast<ErrorCategory>(i);
    if (to_string(c) == *out.envelope.error_category) return exit_code(c);
  }
  return 1;
}

}  // namespace nlsmix

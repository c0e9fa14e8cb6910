// nlsmix: command-line front end. Every subcommand is turned into an
// ExperimentConfig and handed to nlsmix::run, so `--config file.json` and the
// flag form are interchangeable.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nlsmix/cli.hpp"

namespace {

using nlsmix::json;

struct ParamFlags {
  int dim = 1;
  std::string p, q;
  double a = 1.0;
  double mu = 0.0;

  void attach(CLI::App* sub) {
    sub->add_option("--dim,-N", dim, "space dimension (1..3)")->capture_default_str();
    sub->add_option("--p", p, "leading exponent, e.g. 8 or 10/3")->required();
    sub->add_option("--q", q, "lower exponent")->required();
    sub->add_option("--a", a, "prescribed L2 norm")->capture_default_str();
    sub->add_option("--mu", mu, "coupling of the lower power")->capture_default_str();
  }

  [[nodiscard]] nlsmix::ModelParams get() const {
    nlsmix::ModelParams m;
    m.dim = dim;
    m.p = nlsmix::Exponent::parse(p);
    m.q = nlsmix::Exponent::parse(q);
    m.a = a;
    m.mu = mu;
    return m;
  }
};

/// Options copied into the config only when given on the command line.
struct OptionBag {
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> strings;
  std::map<std::string, bool> flags;
  std::vector<std::pair<std::string, CLI::Option*>> seen;

  void num(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    seen.emplace_back(key, sub->add_option(flag, numbers[key], help));
  }
  void str(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    seen.emplace_back(key, sub->add_option(flag, strings[key], help));
  }
  void flag(CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    seen.emplace_back(key, sub->add_flag(name, flags[key], help));
  }

  [[nodiscard]] json to_json() const {
    json o = json::object();
    for (const auto& [key, opt] : seen) {
      if (opt->count() == 0) continue;
      if (numbers.count(key)) {
        const double v = numbers.at(key);
        // integral counts stay integers in the echoed config
        if (v == std::floor(v) && std::abs(v) < 1e15 && (key == "steps" || key == "trials" || key == "points" ||
                                                         key == "samples" || key == "jobs" || key == "grid_points" ||
                                                         key == "sample_every" || key == "N"))
          o[key] = static_cast<std::int64_t>(v);
        else
          o[key] = v;
      } else if (strings.count(key)) {
        o[key] = strings.at(key);
      } else {
        o[key] = flags.at(key);
      }
    }
    return o;
  }
};

void write_or_die(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw nlsmix::Error(nlsmix::ErrorCategory::io, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlsmix: normalized solutions and dynamics for NLS with combined powers"};
  app.set_version_flag("--version", std::string(nlsmix::kVersion));
  bool as_json = false;
  std::string out_path, format, config_path;
  std::uint64_t seed = 0;
  app.add_flag("--json", as_json, "print the result envelope as JSON");
  app.add_option("--out", out_path, "write the envelope (or the table, for --format csv / *.csv) to PATH");
  app.add_option("--format", format, "json or csv; defaults from the --out extension")
      ->check(CLI::IsMember({"json", "csv"}));
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized experiments");
  app.add_option("--config", config_path, "run an ExperimentConfig JSON file instead of a subcommand")
      ->check(CLI::ExistingFile);
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::map<std::string, ParamFlags> pf;
  std::map<std::string, OptionBag> bags;

  // gn takes (N, p) only
  auto* gn = app.add_subcommand("gn", "Gagliardo-Nirenberg constant from the soliton");
  int gn_dim = 1;
  std::string gn_p;
  gn->add_option("--dim,-N", gn_dim, "space dimension")->capture_default_str();
  gn->add_option("--p", gn_p, "exponent")->required();
  bags["gn"].num(gn, "--grid-points", "grid_points", "soliton grid points");
  bags["gn"].num(gn, "--radius", "radius", "soliton grid radius");

  auto* crit = app.add_subcommand("criteria", "existence conditions, h-geometry and blow-up bound");
  pf["criteria"].attach(crit);
  bags["criteria"].num(crit, "--a-tilde", "a_tilde", "also compute the stability window at this mass");
  bags["criteria"].num(crit, "--rho", "rho", "window radius (default 0.01)");

  auto* fib = app.add_subcommand("fiber", "critical points of the fiber map of a triple");
  pf["fiber"].attach(fib);
  std::vector<double> triple;
  auto* triple_opt = fib->add_option("--triple", triple, "g2,mq,mp,m2")->delimiter(',')->expected(4)->required();
  bags["fiber"].str(fib, "--plot-psi", "plot_psi", "write sampled Psi to CSV");
  bags["fiber"].num(fib, "--s-from", "s_from", "first s");
  bags["fiber"].num(fib, "--s-to", "s_to", "last s");
  bags["fiber"].num(fib, "--samples", "samples", "number of samples");
  bags["fiber"].flag(fib, "--check-gn", "check_gn", "check the triple against the GN inequalities");

  auto* gs = app.add_subcommand("ground-state", "normalized solution on a branch");
  pf["ground-state"].attach(gs);
  bags["ground-state"].str(gs, "--branch", "branch", "localmin | mountainpass | unique");
  bags["ground-state"].str(gs, "--method", "method", "shooting (default) | flow (localmin only)");
  bags["ground-state"].str(gs, "--profile", "profile", "write the profile (r, u) to CSV");

  auto* mc = app.add_subcommand("mass-curve", "|u_lambda|_2 along a log grid of lambda < 0");
  pf["mass-curve"].attach(mc);
  bags["mass-curve"].num(mc, "--lambda-from", "lambda_from", "most negative lambda");
  bags["mass-curve"].num(mc, "--lambda-to", "lambda_to", "least negative lambda");
  bags["mass-curve"].num(mc, "--steps", "steps", "grid size");
  bags["mass-curve"].num(mc, "--points", "points", "shooting grid points");
  bags["mass-curve"].num(mc, "--jobs", "jobs", "worker threads");

  auto add_evolve_flags = [&](CLI::App* sub, const std::string& name) {
    auto& b = bags[name];
    b.str(sub, "--init", "init", "CSV file or preset: gaussian, sech, localmin, mountainpass, unique");
    b.num(sub, "--scale", "scale", "apply the mass-preserving dilation s * u");
    b.num(sub, "--width", "width", "preset width");
    b.num(sub, "--dt", "dt", "time step");
    b.num(sub, "--T", "T", "final time");
    b.num(sub, "--points", "points", "grid points");
    b.num(sub, "--extent", "extent", "box half-length or radius");
    b.num(sub, "--sample-every", "sample_every", "steps between samples");
  };
  auto* ev = app.add_subcommand("evolve", "time evolution with conservation and blow-up monitors");
  pf["evolve"].attach(ev);
  add_evolve_flags(ev, "evolve");
  bags["evolve"].str(ev, "--trace", "trace", "write the trace CSV");

  auto* cl = app.add_subcommand("classify", "global existence / blow-up prediction for a datum");
  pf["classify"].attach(cl);
  add_evolve_flags(cl, "classify");
  bags["classify"].num(cl, "--level", "level", "inf of E on P- (computed when omitted)");
  bags["classify"].flag(cl, "--verify", "verify", "run the evolution and compare");

  auto* st = app.add_subcommand("stability", "orbital stability experiment around a computed state");
  pf["stability"].attach(st);
  bags["stability"].str(st, "--branch", "branch", "state to perturb (default localmin)");
  bags["stability"].num(st, "--eps", "eps", "relative H1 size of the perturbation");
  bags["stability"].num(st, "--T", "T", "final time");
  bags["stability"].num(st, "--trials", "trials", "number of random perturbations");
  bags["stability"].num(st, "--dt", "dt", "time step");
  bags["stability"].num(st, "--points", "points", "grid points");

  auto* sw = app.add_subcommand("sweep", "one-parameter table of criteria or asymptotic levels");
  pf["sweep"].attach(sw);
  bags["sweep"].str(sw, "--vary", "vary", "mu | q | a");
  bags["sweep"].num(sw, "--from", "from", "first value");
  bags["sweep"].num(sw, "--to", "to", "last value");
  bags["sweep"].num(sw, "--steps", "steps", "number of values");
  bags["sweep"].str(sw, "--scale", "scale", "log (default) | linear");
  bags["sweep"].str(sw, "--table", "table", "criteria (default) | asymptotics");
  bags["sweep"].num(sw, "--jobs", "jobs", "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nlsmix::exit_code(nlsmix::ErrorCategory::validation);
  }

  nlsmix::ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config = nlsmix::load_config(config_path);
      if (seed_opt->count()) config.seed = seed;
    } else {
      const auto subs = app.get_subcommands();
      if (subs.empty()) {
        std::cerr << app.help();
        return nlsmix::exit_code(nlsmix::ErrorCategory::validation);
      }
      config.command = subs.front()->get_name();
      config.seed = seed;
      config.options = bags[config.command].to_json();
      if (config.command == "gn") {
        config.options["N"] = gn_dim;
        config.options["p"] = nlsmix::exponent_to_json(nlsmix::Exponent::parse(gn_p));
      } else {
        config.params = pf.at(config.command).get();
      }
      if (config.command == "fiber" && triple_opt->count()) config.options["triple"] = triple;
    }
    if (!out_path.empty()) config.output.path = out_path;
    if (!format.empty()) config.output.format = format;
    else if (!out_path.empty() && out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv")
      config.output.format = "csv";
  } catch (const nlsmix::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (as_json) {
      nlsmix::ResultEnvelope env;
      env.status = "error";
      env.error_category = std::string(nlsmix::to_string(e.category()));
      env.message = e.detail();
      env.started = env.finished = nlsmix::utc_timestamp();
      env.config = json::object();
      std::cout << nlsmix::envelope_to_json(env).dump(2) << '\n';
    }
    return nlsmix::exit_code(e.category());
  }

  nlsmix::GnCache cache(nlsmix::GnCache::default_dir());
  auto out = nlsmix::run(config, cache);
  const json env = nlsmix::envelope_to_json(out.envelope);

  try {
    if (!config.output.path.empty()) {
      if (config.output.format == "csv") {
        if (!out.csv && !out.envelope.error_category)
          throw nlsmix::Error(nlsmix::ErrorCategory::validation, config.command + " produces no table");
        if (out.csv) write_or_die(config.output.path, *out.csv);
      } else {
        write_or_die(config.output.path, env.dump(2) + "\n");
      }
    }
  } catch (const nlsmix::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlsmix::exit_code(e.category());
  }

  if (as_json) {
    std::cout << env.dump(2) << '\n';
  } else if (config.output.format == "csv" && config.output.path.empty() && out.csv) {
    std::cout << *out.csv;
  } else {
    for (const auto& line : out.summary) std::cout << line << '\n';
  }
  if (as_json && out.envelope.error_category) std::cerr << "error: " << out.envelope.message << '\n';
  return nlsmix::exit_status(out);
}

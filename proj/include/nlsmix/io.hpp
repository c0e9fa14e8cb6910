#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nlsmix/errors.hpp"
#include "nlsmix/gn.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"

namespace nlsmix {

inline constexpr std::string_view kVersion = "0.4.0";

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// numbers and exponents

/// Shortest round-tripping decimal form.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Integers and inexact values as JSON numbers, other exact ratios as "a/b",
/// so that parsing the result restores the same Exponent.
inline json exponent_to_json(const Exponent& e) {
  if (e.exact && e.exact->den != 1) return e.to_string();
  if (e.exact) return e.exact->num;
  return e.value;
}

inline Exponent exponent_from_json(const json& j) {
  if (j.is_string()) return Exponent::parse(j.get<std::string>());
  if (j.is_number_integer()) return Exponent(Rational{j.get<std::int64_t>(), 1});
  if (j.is_number()) {
    Exponent e;
    e.value = j.get<double>();
    if (e.value == std::floor(e.value) && std::abs(e.value) < 1e15) e = Exponent(e.value);
    return e;
  }
  fail(ErrorCategory::validation, "exponent must be a number or a string such as \"10/3\"");
}

inline json params_to_json(const ModelParams& p) {
  return json{{"N", p.dim}, {"p", exponent_to_json(p.p)}, {"q", exponent_to_json(p.q)}, {"a", p.a}, {"mu", p.mu}};
}

inline ModelParams params_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCategory::validation, "params must be a JSON object");
  for (const char* key : {"N", "p", "q", "a", "mu"})
    if (!j.contains(key)) fail(ErrorCategory::validation, std::string("params lacks \"") + key + "\"");
  ModelParams p;
  try {
    p.dim = j.at("N").get<int>();
    p.p = exponent_from_json(j.at("p"));
    p.q = exponent_from_json(j.at("q"));
    p.a = j.at("a").get<double>();
    p.mu = j.at("mu").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCategory::validation, std::string("bad params: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// experiment configuration

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gn",       "criteria", "fiber",     "ground-state", "mass-curve",
                                              "evolve",   "classify", "stability", "sweep"};
  return names;
}

struct OutputSpec {
  std::string path;            ///< empty: stdout only
  std::string format = "json"; ///< json | csv

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ExperimentConfig {
  std::string command;
  std::optional<ModelParams> params;  ///< gn takes (N, p) through options
  json options = json::object();      ///< command-specific
  OutputSpec output;
  std::uint64_t seed = 0;
};

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.params) j["params"] = params_to_json(*c.params);
  j["options"] = c.options;
  j["output"] = json{{"path", c.output.path}, {"format", c.output.format}};
  j["seed"] = c.seed;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCategory::validation, "config must be a JSON object");
  ExperimentConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    if (j.contains("params") && !j.at("params").is_null()) c.params = params_from_json(j.at("params"));
    if (j.contains("options")) c.options = j.at("options");
    if (!c.options.is_object()) fail(ErrorCategory::validation, "config options must be an object");
    if (j.contains("output")) {
      const auto& o = j.at("output");
      c.output.path = o.value("path", std::string{});
      c.output.format = o.value("format", std::string{"json"});
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCategory::validation, std::string("bad config: ") + e.what());
  }
  if (std::find(command_names().begin(), command_names().end(), c.command) == command_names().end())
    fail(ErrorCategory::validation, "unknown command '" + c.command + "'");
  if (c.output.format != "json" && c.output.format != "csv")
    fail(ErrorCategory::validation, "output format must be json or csv");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCategory::validation, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// result envelope

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ResultEnvelope {
  json config;
  std::string started, finished;
  json payload = json::object();
  json provenance = json::array();  ///< constants used, each with its residual
  std::string status = "ok";
  std::optional<std::string> error_category;
  std::string message;
};

inline json envelope_to_json(const ResultEnvelope& e) {
  json j;
  j["version"] = std::string(kVersion);
  j["status"] = e.status;
  if (e.error_category) j["error"] = json{{"category", *e.error_category}, {"message", e.message}};
  j["config"] = e.config;
  j["timestamps"] = json{{"started", e.started}, {"finished", e.finished}};
  j["provenance"] = e.provenance;
  j["payload"] = e.payload;
  return j;
}

inline json gn_to_json(const GNConstants& g) {
  json j{{"N", g.dim},        {"p", g.p},
         {"c_np", g.c_np},    {"mass_w", g.mass_w},
         {"residual", g.residual}, {"grid", json{{"radius", g.grid.radius}, {"points", g.grid.points}}}};
  if (g.abar_n) j["abar_n"] = *g.abar_n;
  if (g.abar_direct) j["abar_direct"] = *g.abar_direct;
  return j;
}

inline GNConstants gn_from_json(const json& j) {
  GNConstants g;
  g.dim = j.at("N").get<int>();
  g.p = j.at("p").get<double>();
  g.c_np = j.at("c_np").get<double>();
  g.mass_w = j.at("mass_w").get<double>();
  g.residual = j.at("residual").get<double>();
  g.grid = RadialGrid{g.dim, j.at("grid").at("radius").get<double>(), j.at("grid").at("points").get<std::size_t>()};
  if (j.contains("abar_n")) g.abar_n = j.at("abar_n").get<double>();
  if (j.contains("abar_direct")) g.abar_direct = j.at("abar_direct").get<double>();
  return g;
}

// ---------------------------------------------------------------------------
// constants cache

/// Soliton constants stored in <dir>/gn-cache.json, keyed by library version,
/// N, p and the soliton grid. A different version never hits an old entry.
class GnCache {
 public:
  explicit GnCache(std::filesystem::path dir, std::string version = std::string(kVersion))
      : dir_(std::move(dir)), version_(std::move(version)) {}

  /// NLSMIX_CACHE_DIR when set, otherwise .nlsmix-cache in the working directory.
  static std::filesystem::path default_dir() {
    if (const char* env = std::getenv("NLSMIX_CACHE_DIR"); env && *env) return env;
    return ".nlsmix-cache";
  }

  [[nodiscard]] std::string key(int dim, double p, const RadialGrid& grid) const {
    return version_ + "|" + std::to_string(dim) + "|" + format_double(p) + "|" + std::to_string(grid.points) + "|" +
           format_double(grid.radius);
  }

  [[nodiscard]] std::filesystem::path file() const { return dir_ / "gn-cache.json"; }

  std::optional<GNConstants> lookup(int dim, double p, const RadialGrid& grid) {
    std::lock_guard<std::mutex> lock(mutex_);
    const json db = read();
    const auto k = key(dim, p, grid);
    if (!db.contains(k)) return std::nullopt;
    try {
      return gn_from_json(db.at(k));
    } catch (const json::exception&) {
      return std::nullopt;  // damaged entry: recompute
    }
  }

  void store(const GNConstants& g) {
    std::lock_guard<std::mutex> lock(mutex_);
    json db = read();
    db[key(g.dim, g.p, g.grid)] = gn_to_json(g);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto tmp = dir_ / ("gn-cache.json.tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    {
      std::ofstream out(tmp);
      if (!out) return;  // an unwritable cache only costs time
      out << db.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, file(), ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  /// Cached constants, computing and storing them on a miss. `hit` reports which.
  GNConstants get(int dim, double p, const RadialGrid& grid, bool* hit = nullptr) {
    if (auto g = lookup(dim, p, grid)) {
      if (hit) *hit = true;
      return *g;
    }
    if (hit) *hit = false;
    auto g = gn_constant(dim, p, grid);
    store(g);
    return g;
  }
  GNConstants get(int dim, double p, bool* hit = nullptr) { return get(dim, p, default_soliton_grid(dim), hit); }

  GNPair pair(const ModelParams& params) {
    params.validate();
    return {get(params.dim, params.q), get(params.dim, params.p)};
  }

 private:
  json read() const {
    std::ifstream in(file());
    if (!in) return json::object();
    try {
      json db = json::parse(in);
      return db.is_object() ? db : json::object();
    } catch (const json::exception&) {
      return json::object();
    }
  }

  std::filesystem::path dir_;
  std::string version_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// CSV

/// Minimal CSV writer; numbers in shortest round-trip form.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& cols) { row_strings(cols); }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i]);
    out_ << '\n';
  }

  static std::string cell(double v) { return std::isfinite(v) ? format_double(v) : ""; }
  static std::string cell(const std::optional<double>& v) { return v ? cell(*v) : ""; }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return quote(s); }
  static std::string cell(std::string_view s) { return quote(std::string(s)); }
  static std::string cell(const char* s) { return quote(s); }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

  std::ostream& out_;
};

/// Reads numeric CSV with a header line; returns columns by header name.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] const std::vector<double>* column(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return &columns[i];
    return nullptr;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  if (!std::getline(in, line)) fail(ErrorCategory::validation, path.string() + " is empty");
  t.names = split(line);
  t.columns.resize(t.names.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != t.names.size())
      fail(ErrorCategory::validation, path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      if (ec != std::errc() || ptr != cells[i].data() + cells[i].size())
        fail(ErrorCategory::validation, path.string() + ":" + std::to_string(lineno) + ": not a number: " + cells[i]);
      t.columns[i].push_back(v);
    }
  }
  return t;
}

}  // namespace nlsmix

#pragma once

// JSON conversion for points, run configurations and verification reports.
// Complex numbers are written as [re, im] pairs.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "frobkit/hierarchy.hpp"

namespace frobkit {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json to_json_c(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("field '" + field + "': expected a number or an [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json_cv(const std::vector<cplx>& v) {
  json out = json::array();
  for (auto c : v) out.push_back(to_json_c(c));
  return out;
}

inline std::vector<cplx> complex_vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError("field '" + field + "': expected an array");
  std::vector<cplx> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(complex_from_json(j[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

inline json point_to_json(const Point& p) {
  return {{"m", p.m()},
          {"n", p.n()},
          {"s", p.s()},
          {"tail_depth", p.tail_depth()},
          {"n_samples", p.n_samples()},
          {"phi", to_json_c(p.phi())},
          {"a_tail", {{"lo", p.a_lo()}, {"hi", p.a_hi()}, {"coeffs", to_json_cv(p.a_tail())}}},
          {"ahat", {{"lo", p.ahat_lo()}, {"hi", p.ahat_hi()}, {"coeffs", to_json_cv(p.ahat())}}}};
}

namespace detail {
// A tail is {lo, hi, coeffs}; lo and hi must match the window fixed by (m, n, tail_depth).
inline std::vector<cplx> tail_from_json(const json& j, const std::string& field, int lo, int hi) {
  if (!j.is_object() || !j.contains("coeffs"))
    throw ConfigError("field '" + field + "': expected an object {lo, hi, coeffs}");
  const int jlo = field_or(j, "lo", lo);
  const int jhi = field_or(j, "hi", hi);
  if (jlo != lo || jhi != hi)
    throw ConfigError("field '" + field + "': window [" + std::to_string(jlo) + ", " + std::to_string(jhi) +
                      "] does not match the expected [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  auto c = complex_vector_from_json(j.at("coeffs"), field + ".coeffs");
  if (static_cast<int>(c.size()) != hi - lo + 1)
    throw ConfigError("field '" + field + ".coeffs': expected " + std::to_string(hi - lo + 1) + " entries, got " +
                      std::to_string(c.size()));
  return c;
}
}  // namespace detail

inline Point point_from_json(const json& j, const ModelParams& defaults = {}) {
  if (!j.is_object()) throw ConfigError("point: expected a JSON object");
  ModelParams params = defaults;
  params.m = field_or(j, "m", params.m);
  params.n = field_or(j, "n", params.n);
  params.s = field_or(j, "s", params.s);
  params.tail_depth = field_or(j, "tail_depth", params.tail_depth);
  params.n_samples = field_or(j, "n_samples", params.n_samples);
  for (const char* key : {"phi", "a_tail", "ahat"})
    if (!j.contains(key)) throw ConfigError(std::string("point: missing field '") + key + "'");
  try {
    params.check();
    const int T = params.tail_depth;
    return {params, complex_from_json(j.at("phi"), "phi"),
            detail::tail_from_json(j.at("a_tail"), "a_tail", params.m - 2 - T, params.m - 2),
            detail::tail_from_json(j.at("ahat"), "ahat", -params.n, -params.n + T)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("point: ") + e.what());
  }
}

inline json winding_to_json(const WindingInfo& w) { return {{"winding", w.winding}, {"residual", w.residual}}; }

inline json validation_to_json(const ValidationReport& r) {
  return {{"ahat_lead_ok", r.ahat_lead_ok},     {"ahat_lead_abs", r.ahat_lead_abs},
          {"derivatives_ok", r.derivatives_ok}, {"min_abs_dzeta", r.min_dzeta},
          {"min_abs_dell", r.min_dell},         {"zeta_winding_ok", r.zeta_winding_ok},
          {"zeta_winding", winding_to_json(r.zeta_winding)},     {"ab_winding_ok", r.ab_winding_ok},
          {"a_winding", winding_to_json(r.a_winding)},           {"ahat_winding", winding_to_json(r.ahat_winding)},
          {"ok", r.ok()}};
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  int m = 2;
  int n = 1;
  int s = 1;
  int tail_depth = 8;
  int n_samples = 256;
  int grid_size = 64;
  std::uint64_t seed = 1;
  int max_level = 3;
  int points = 20;      // random points per pointwise check
  int directions = 5;   // random directions per point in the princon1 check
  int loops = 3;        // random loops per loop-space check
  std::map<std::string, double> tolerances;
  std::vector<std::string> suites;  // empty means every suite
  std::string out_dir = ".";
  // evolve
  std::string flow = "Shat0";
  double dt = 1e-3;
  int steps = 100;
  int snapshot_every = 10;
  // flat
  std::string point_file;

  [[nodiscard]] ModelParams params() const {
    ModelParams p;
    p.m = m;
    p.n = n;
    p.s = s;
    p.tail_depth = tail_depth;
    p.n_samples = n_samples;
    p.tolerances = tolerances;
    return p;
  }

  [[nodiscard]] double tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }

  void check() const {
    try {
      params().check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (grid_size < 8 || (grid_size & (grid_size - 1)) != 0) throw ConfigError("grid_size must be a power of two >= 8");
    if (max_level < 1) throw ConfigError("max_level must be at least 1");
    if (points < 1 || directions < 1 || loops < 1) throw ConfigError("points, directions and loops must be positive");
    if (steps < 0) throw ConfigError("steps must be nonnegative");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (snapshot_every < 1) throw ConfigError("snapshot_every must be positive");
  }
};

inline json config_to_json(const RunConfig& c) {
  return {{"m", c.m},
          {"n", c.n},
          {"s", c.s},
          {"tail_depth", c.tail_depth},
          {"n_samples", c.n_samples},
          {"grid_size", c.grid_size},
          {"seed", c.seed},
          {"max_level", c.max_level},
          {"points", c.points},
          {"directions", c.directions},
          {"loops", c.loops},
          {"tolerances", c.tolerances},
          {"suites", c.suites},
          {"out_dir", c.out_dir},
          {"flow", c.flow},
          {"dt", c.dt},
          {"steps", c.steps},
          {"snapshot_every", c.snapshot_every},
          {"point_file", c.point_file}};
}

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  static const std::vector<std::string> known = {
      "m",     "n",      "s",     "tail_depth", "n_samples", "grid_size", "seed",  "max_level",      "points",
      "directions", "loops", "tolerances", "suites", "out_dir", "flow", "dt", "steps", "snapshot_every", "point_file"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("config: unknown field '" + it.key() + "'");
  RunConfig c;
  c.m = field_or(j, "m", c.m);
  c.n = field_or(j, "n", c.n);
  c.s = field_or(j, "s", c.s);
  c.tail_depth = field_or(j, "tail_depth", c.tail_depth);
  c.n_samples = field_or(j, "n_samples", c.n_samples);
  c.grid_size = field_or(j, "grid_size", c.grid_size);
  c.seed = field_or(j, "seed", c.seed);
  c.max_level = field_or(j, "max_level", c.max_level);
  c.points = field_or(j, "points", c.points);
  c.directions = field_or(j, "directions", c.directions);
  c.loops = field_or(j, "loops", c.loops);
  c.tolerances = field_or(j, "tolerances", c.tolerances);
  c.suites = field_or(j, "suites", c.suites);
  c.out_dir = field_or(j, "out_dir", c.out_dir);
  c.flow = field_or(j, "flow", c.flow);
  c.dt = field_or(j, "dt", c.dt);
  c.steps = field_or(j, "steps", c.steps);
  c.snapshot_every = field_or(j, "snapshot_every", c.snapshot_every);
  c.point_file = field_or(j, "point_file", c.point_file);
  return c;
}

/// Parse a config file; syntax errors report line and column.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// Parse "t-1", "h2", "hhat0".
inline CoordIndex parse_coord(const std::string& s) {
  auto num = [&](std::size_t from) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s.substr(from), &used);
      if (used != s.size() - from) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad coordinate label '" + s + "'");
    }
  };
  if (s.rfind("hhat", 0) == 0) return CoordIndex::hhat(num(4));
  if (s.rfind("h", 0) == 0) return CoordIndex::h(num(1));
  if (s.rfind("t", 0) == 0) return CoordIndex::t(num(1));
  throw ConfigError("bad coordinate label '" + s + "'");
}

/// Parse "S2", "Shat1", "Shat0" or "T:<coord>,<p>".
inline FlowIndex parse_flow(const std::string& s) {
  if (s == "Shat0") return FlowIndex::shat0();
  try {
    if (s.rfind("Shat", 0) == 0) return FlowIndex::shat(std::stoi(s.substr(4)));
    if (s.rfind("S", 0) == 0) return FlowIndex::s(std::stoi(s.substr(1)));
    if (s.rfind("T:", 0) == 0) {
      const auto comma = s.find(',');
      if (comma == std::string::npos) throw ConfigError("flow '" + s + "': expected T:<coord>,<p>");
      return FlowIndex::principal(parse_coord(s.substr(2, comma - 2)), std::stoi(s.substr(comma + 1)));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad flow name '" + s + "'");
}

}  // namespace frobkit

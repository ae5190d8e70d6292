#pragma once
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"
#include "errors.hpp"
#include "stokes.hpp"
#include "synthesis.hpp"

namespace vdflow {

enum class ScenarioKind { taylor_green, density_disk, decay_experiment, twisted_divergence_demo, stokes_scaling, custom };

inline ScenarioKind parse_scenario(const std::string& s) {
  static const std::map<std::string, ScenarioKind> names{{"taylor_green", ScenarioKind::taylor_green},
                                                         {"density_disk", ScenarioKind::density_disk},
                                                         {"decay_experiment", ScenarioKind::decay_experiment},
                                                         {"twisted_divergence_demo", ScenarioKind::twisted_divergence_demo},
                                                         {"stokes_scaling", ScenarioKind::stokes_scaling},
                                                         {"custom", ScenarioKind::custom}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("key 'scenario': unknown scenario '" + s + "'");
  return it->second;
}

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::taylor_green: return "taylor_green";
    case ScenarioKind::density_disk: return "density_disk";
    case ScenarioKind::decay_experiment: return "decay_experiment";
    case ScenarioKind::twisted_divergence_demo: return "twisted_divergence_demo";
    case ScenarioKind::stokes_scaling: return "stokes_scaling";
    case ScenarioKind::custom: return "custom";
  }
  return "?";
}

struct VelocitySpec {
  std::string kind = "taylor_green";  // taylor_green | shear | random | zero
  double amplitude = 1.0;             // for random: target max |grad v0|
  int bandwidth = 4;
};

struct DensitySpec {
  std::string kind = "uniform";  // uniform | piecewise_constant | general
  double m = 1.0;
  double sigma = 0.0;
  std::string shape = "disk";  // disk | rectangle
  std::array<double, 2> center{two_pi / 4, two_pi / 4};
  double radius = 0.65;
  std::array<double, 2> lo{0, 0}, hi{1, 1};
  double M = 1.2;     // general: upper bound
  int bandwidth = 3;  // general: smoothness of the random field
};

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::taylor_green;
  Grid grid{64};
  double nu = 0.1;
  VelocitySpec velocity;
  DensitySpec density;
  double dt = 1e-2;
  double T = 1.0;
  int report_every = 10;
  SolverConfig solver;
  std::string output_dir;
  std::uint64_t seed = 1234;
  int markers = 256;
  std::map<std::string, bool> checks;  // explicit enable/disable
  nlohmann::json extra;                // scenario-specific block, e.g. "twisted" or "stokes_scaling"
  nlohmann::json raw;

  int steps() const { return int(std::llround(T / dt)); }
};

namespace detail {

// Reads obj[key] as T with the dotted path in error messages.
template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("key '" + path + key + "': " + e.what());
  }
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("key '" + key + "': " + what);
}

inline void reject_unknown(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError("key '" + path + "': expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok |= it.key() == k;
    if (!ok) throw ConfigError("key '" + path + (path.empty() ? "" : ".") + it.key() + "': unknown key");
  }
}

}  // namespace detail

// Scenario defaults, overridden by whatever the config file sets.
inline RunConfig scenario_defaults(ScenarioKind k) {
  RunConfig c;
  c.scenario = k;
  switch (k) {
    case ScenarioKind::taylor_green:
      c.velocity = {"taylor_green", 1.0, 4};
      break;
    case ScenarioKind::density_disk:
      c.velocity = {"taylor_green", 0.25, 4};
      c.density.kind = "piecewise_constant";
      c.density.sigma = 0.1;
      c.dt = 0.02;
      c.report_every = 5;
      break;
    case ScenarioKind::decay_experiment:
      c.velocity = {"random", 0.15, 4};
      c.density.kind = "piecewise_constant";
      c.density.sigma = 0.1;
      c.dt = 0.02;
      c.T = 3.0;
      c.report_every = 5;
      break;
    case ScenarioKind::twisted_divergence_demo:
    case ScenarioKind::stokes_scaling:
      c.T = 1.0;
      break;
    case ScenarioKind::custom:
      break;
  }
  return c;
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::get_or;
  using detail::require;
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  detail::reject_unknown(j, "", {"scenario", "grid", "physics", "time", "solver", "output_dir", "seed", "checks",
                                 "markers", "twisted", "stokes_scaling", "decay"});
  require(j.contains("scenario"), "scenario", "missing");
  RunConfig c = scenario_defaults(parse_scenario(get_or<std::string>(j, "scenario", "", "")));
  c.raw = j;

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, "grid", {"n", "L"});
    const int n = get_or<int>(g, "n", "grid.", c.grid.n);
    const double L = get_or<double>(g, "L", "grid.", c.grid.L);
    require(n >= 8 && (n & (n - 1)) == 0, "grid.n", "must be a power of two >= 8");
    require(L > 0, "grid.L", "must be positive");
    c.grid = Grid(n, L);
    c.density.center = {L / 4, L / 4};
    c.density.radius *= L / two_pi;
  }

  if (j.contains("physics")) {
    const auto& p = j["physics"];
    detail::reject_unknown(p, "physics", {"nu", "velocity", "density"});
    c.nu = get_or<double>(p, "nu", "physics.", c.nu);
    require(c.nu > 0, "physics.nu", "must be positive");
    if (p.contains("velocity")) {
      const auto& v = p["velocity"];
      detail::reject_unknown(v, "physics.velocity", {"kind", "amplitude", "bandwidth"});
      c.velocity.kind = get_or<std::string>(v, "kind", "physics.velocity.", c.velocity.kind);
      c.velocity.amplitude = get_or<double>(v, "amplitude", "physics.velocity.", c.velocity.amplitude);
      c.velocity.bandwidth = get_or<int>(v, "bandwidth", "physics.velocity.", c.velocity.bandwidth);
      const auto& k = c.velocity.kind;
      require(k == "taylor_green" || k == "shear" || k == "random" || k == "zero", "physics.velocity.kind",
              "expected taylor_green, shear, random or zero");
      require(c.velocity.bandwidth >= 1 && c.velocity.bandwidth <= c.grid.n / 3, "physics.velocity.bandwidth",
              "must be in [1, n/3]");
    }
    if (p.contains("density")) {
      const auto& d = p["density"];
      detail::reject_unknown(d, "physics.density",
                             {"kind", "m", "sigma", "jump_ratio", "shape", "center", "radius", "min", "max", "M",
                              "bandwidth", "value"});
      auto& ds = c.density;
      ds.kind = get_or<std::string>(d, "kind", "physics.density.", ds.kind);
      require(ds.kind == "uniform" || ds.kind == "piecewise_constant" || ds.kind == "general", "physics.density.kind",
              "expected uniform, piecewise_constant or general");
      ds.m = get_or<double>(d, "m", "physics.density.", get_or<double>(d, "value", "physics.density.", ds.m));
      require(ds.m > 0, "physics.density.m", "must be positive");
      ds.sigma = get_or<double>(d, "sigma", "physics.density.", ds.sigma);
      if (d.contains("jump_ratio")) {
        const double jr = get_or<double>(d, "jump_ratio", "physics.density.", 0.0);
        require(jr >= 0, "physics.density.jump_ratio", "must be nonnegative");
        ds.sigma = jr * ds.m;
      }
      require(ds.m + ds.sigma > 0, "physics.density.sigma", "m + sigma must be positive");
      ds.shape = get_or<std::string>(d, "shape", "physics.density.", ds.shape);
      require(ds.shape == "disk" || ds.shape == "rectangle", "physics.density.shape", "expected disk or rectangle");
      ds.center = get_or<std::array<double, 2>>(d, "center", "physics.density.", ds.center);
      ds.radius = get_or<double>(d, "radius", "physics.density.", ds.radius);
      require(ds.radius > 0, "physics.density.radius", "must be positive");
      ds.lo = get_or<std::array<double, 2>>(d, "min", "physics.density.", ds.lo);
      ds.hi = get_or<std::array<double, 2>>(d, "max", "physics.density.", ds.hi);
      ds.M = get_or<double>(d, "M", "physics.density.", ds.M);
      ds.bandwidth = get_or<int>(d, "bandwidth", "physics.density.", ds.bandwidth);
      if (ds.kind == "general") require(ds.M > ds.m, "physics.density.M", "must exceed m");
    }
  }

  if (j.contains("time")) {
    const auto& t = j["time"];
    detail::reject_unknown(t, "time", {"dt", "T", "report_every"});
    c.dt = get_or<double>(t, "dt", "time.", c.dt);
    c.T = get_or<double>(t, "T", "time.", c.T);
    c.report_every = get_or<int>(t, "report_every", "time.", c.report_every);
  }
  require(c.dt > 0, "time.dt", "must be positive");
  require(c.T > 0, "time.T", "must be positive");
  require(c.report_every >= 1, "time.report_every", "must be a positive integer");
  require(std::abs(c.steps() * c.dt - c.T) <= 1e-9 * c.T, "time.T", "must be an integer multiple of dt");
  require(c.steps() % c.report_every == 0, "time.report_every", "must divide the step count evenly");

  c.solver.nu = c.nu;
  c.solver.dt = c.dt;
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    detail::reject_unknown(s, "solver", {"picard_tol", "picard_max", "scheme", "smallness_cap", "jump_cap",
                                         "cfl_safety", "div_tol", "interpolation"});
    c.solver.picard_tol = get_or<double>(s, "picard_tol", "solver.", c.solver.picard_tol);
    c.solver.picard_max = get_or<int>(s, "picard_max", "solver.", c.solver.picard_max);
    try {
      c.solver.scheme = parse_scheme(get_or<std::string>(s, "scheme", "solver.", to_string(c.solver.scheme)));
      c.solver.interp = parse_interp_kind(get_or<std::string>(s, "interpolation", "solver.", to_string(c.solver.interp)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'solver': ") + e.what());
    }
    c.solver.smallness_cap = get_or<double>(s, "smallness_cap", "solver.", c.solver.smallness_cap);
    c.solver.jump_cap = get_or<double>(s, "jump_cap", "solver.", c.solver.jump_cap);
    c.solver.cfl_safety = get_or<double>(s, "cfl_safety", "solver.", c.solver.cfl_safety);
    c.solver.div_tol = get_or<double>(s, "div_tol", "solver.", c.solver.div_tol);
  }
  require(c.solver.picard_max >= 1, "solver.picard_max", "must be at least 1");
  require(c.solver.picard_tol > 0 && c.solver.smallness_cap > 0 && c.solver.jump_cap > 0 && c.solver.cfl_safety > 0 &&
              c.solver.div_tol > 0,
          "solver", "all tolerances must be positive");

  c.output_dir = get_or<std::string>(j, "output_dir", "", c.output_dir);
  c.seed = get_or<std::uint64_t>(j, "seed", "", c.seed);
  c.markers = get_or<int>(j, "markers", "", c.markers);
  require(c.markers == 0 || c.markers >= 16, "markers", "need 0 (off) or at least 16 markers");
  if (j.contains("checks")) {
    const auto& ch = j["checks"];
    if (ch.is_array()) {
      for (const auto& name : ch) {
        require(name.is_string(), "checks", "expected an array of check names");
        c.checks[name.get<std::string>()] = true;
      }
      c.checks["__explicit_list__"] = true;
    } else if (ch.is_object()) {
      for (auto it = ch.begin(); it != ch.end(); ++it) {
        require(it.value().is_boolean(), "checks." + it.key(), "expected true or false");
        c.checks[it.key()] = it.value().get<bool>();
      }
    } else {
      throw ConfigError("key 'checks': expected an array of names or an object of booleans");
    }
  }
  for (const char* block : {"twisted", "stokes_scaling", "decay"})
    if (j.contains(block)) c.extra[block] = j[block];
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

// ---- building initial data from a config ----

inline VectorField build_velocity(const RunConfig& c) {
  const Grid& g = c.grid;
  const auto& v = c.velocity;
  if (v.kind == "zero") return VectorField(g);
  if (v.kind == "taylor_green") return taylor_green(g, v.amplitude);
  if (v.kind == "shear") {
    const double k = g.k0();
    return VectorField::from_function(
        g, [&](double, double y) { return std::array<double, 2>{v.amplitude * std::sin(k * y), 0.0}; });
  }
  VectorField r = random_solenoidal_field(g, v.bandwidth, c.seed, 3.0);
  const double gmax = max_op_norm(jacobian(r));
  return gmax > 0 ? (v.amplitude / gmax) * r : r;
}

inline Density build_density(const RunConfig& c) {
  const auto& d = c.density;
  if (d.kind == "uniform") return Density::uniform(d.m);
  if (d.kind == "general") {
    ScalarField f = random_band_limited(c.grid, d.bandwidth, c.seed + 17, 2.0);
    const double lo = min_value(f), hi = max_value(f);
    const double mid = 0.5 * (d.m + d.M), half = 0.45 * (d.M - d.m);
    for (auto& x : f.values) x = mid + half * (2.0 * (x - lo) / (hi - lo) - 1.0);
    return Density::general(std::move(f), d.m, d.M);
  }
  if (d.shape == "rectangle") return Density::piecewise(d.m, d.sigma, Rectangle{d.lo[0], d.lo[1], d.hi[0], d.hi[1]});
  return Density::piecewise(d.m, d.sigma, Disk{d.center[0], d.center[1], d.radius});
}

inline std::optional<InterfaceMarkers> build_markers(const RunConfig& c) {
  const auto& d = c.density;
  if (c.markers == 0 || d.kind != "piecewise_constant" || d.sigma == 0.0) return std::nullopt;
  if (d.shape == "rectangle") return rectangle_markers(Rectangle{d.lo[0], d.lo[1], d.hi[0], d.hi[1]}, c.markers / 4);
  return disk_markers(Disk{d.center[0], d.center[1], d.radius}, c.markers);
}

}  // namespace vdflow

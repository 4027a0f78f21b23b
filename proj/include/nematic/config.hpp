/// @file config.hpp
/// @brief Flat `section.key = value` run configuration with line-numbered diagnostics.
#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nematic/io.hpp"
#include "nematic/optimize.hpp"

namespace nematic {

struct RunConfig {
  GridSpec grid{1.0, 1.0, 32, 32, 4e-3, 2e-4, 2};
  PhysParams physics;
  std::string scenario = "random";  // stationary | vortex | rotating | random
  double beta1 = 1, beta2 = 1, beta3 = 0, beta4 = 0, gamma = 1e-3;
  std::string target = "manufactured";  // manufactured | <control csv>
  double target_amplitude = 1.0;
  double m_space = std::numeric_limits<double>::infinity();
  double m_time = std::numeric_limits<double>::infinity();
  std::string initial_control = "scenario";  // scenario | h_ref | <control csv>
  OptimizeOptions optimize;
  std::string output_dir = "out";
  int snapshot_stride = 10;
  bool emit_vtk = true;
  std::uint64_t seed = 42;

  std::map<std::string, int> lines;  // key -> line that set it
  std::optional<BoundaryControl> target_file, initial_file;

  int line_of(const std::string& key) const {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  }
};

namespace detail {

template <class T>
using Accessor = std::function<T&(RunConfig&)>;

struct ConfigKey {
  std::string key;
  std::variant<Accessor<double>, Accessor<int>, Accessor<std::string>, Accessor<bool>, Accessor<std::uint64_t>> field;
  std::function<std::string(const RunConfig&)> check;  // empty string when valid
};

inline std::string positive(double x) { return x > 0 ? "" : "must be positive"; }
inline std::string non_negative(double x) { return x >= 0 ? "" : "must be non-negative"; }

inline const std::vector<ConfigKey>& config_keys() {
  using C = RunConfig;
  static const std::vector<ConfigKey> keys = {
      {"grid.nx", Accessor<int>([](C& c) -> int& { return c.grid.nx; }),
       [](const C& c) { return c.grid.nx >= 4 ? "" : "must be >= 4"; }},
      {"grid.ny", Accessor<int>([](C& c) -> int& { return c.grid.ny; }),
       [](const C& c) { return c.grid.ny >= 4 ? "" : "must be >= 4"; }},
      {"grid.lx", Accessor<double>([](C& c) -> double& { return c.grid.lx; }), [](const C& c) { return positive(c.grid.lx); }},
      {"grid.ly", Accessor<double>([](C& c) -> double& { return c.grid.ly; }), [](const C& c) { return positive(c.grid.ly); }},
      {"grid.dt", Accessor<double>([](C& c) -> double& { return c.grid.dt; }), [](const C& c) { return positive(c.grid.dt); }},
      {"grid.t_final", Accessor<double>([](C& c) -> double& { return c.grid.t_final; }),
       [](const C& c) { return positive(c.grid.t_final); }},
      {"grid.director_dim", Accessor<int>([](C& c) -> int& { return c.grid.n_dir; }),
       [](const C& c) { return c.grid.n_dir == 2 || c.grid.n_dir == 3 ? "" : "must be 2 or 3"; }},
      {"physics.nu", Accessor<double>([](C& c) -> double& { return c.physics.nu; }), [](const C& c) { return positive(c.physics.nu); }},
      {"physics.lambda", Accessor<double>([](C& c) -> double& { return c.physics.lambda; }),
       [](const C& c) { return non_negative(c.physics.lambda); }},
      {"physics.eta", Accessor<double>([](C& c) -> double& { return c.physics.eta; }),
       [](const C& c) { return positive(c.physics.eta); }},
      {"physics.epsilon", Accessor<double>([](C& c) -> double& { return c.physics.epsilon; }),
       [](const C& c) { return positive(c.physics.epsilon); }},
      {"scenario.name", Accessor<std::string>([](C& c) -> std::string& { return c.scenario; }),
       [](const C& c) {
         for (const char* n : {"stationary", "vortex", "rotating", "random"})
           if (c.scenario == n) return "";
         return "must be one of stationary, vortex, rotating, random";
       }},
      {"cost.beta1", Accessor<double>([](C& c) -> double& { return c.beta1; }), [](const C& c) { return non_negative(c.beta1); }},
      {"cost.beta2", Accessor<double>([](C& c) -> double& { return c.beta2; }), [](const C& c) { return non_negative(c.beta2); }},
      {"cost.beta3", Accessor<double>([](C& c) -> double& { return c.beta3; }), [](const C& c) { return non_negative(c.beta3); }},
      {"cost.beta4", Accessor<double>([](C& c) -> double& { return c.beta4; }), [](const C& c) { return non_negative(c.beta4); }},
      {"cost.gamma", Accessor<double>([](C& c) -> double& { return c.gamma; }), [](const C& c) { return non_negative(c.gamma); }},
      {"cost.target", Accessor<std::string>([](C& c) -> std::string& { return c.target; }),
       [](const C& c) { return c.target.empty() ? "must be 'manufactured' or a control file path" : ""; }},
      {"cost.target_amplitude", Accessor<double>([](C& c) -> double& { return c.target_amplitude; }), {}},
      {"control.M_space", Accessor<double>([](C& c) -> double& { return c.m_space; }), [](const C& c) { return positive(c.m_space); }},
      {"control.M_time", Accessor<double>([](C& c) -> double& { return c.m_time; }), [](const C& c) { return positive(c.m_time); }},
      {"control.initial", Accessor<std::string>([](C& c) -> std::string& { return c.initial_control; }),
       [](const C& c) { return c.initial_control.empty() ? "must be 'scenario', 'h_ref' or a control file path" : ""; }},
      {"optimize.max_iters", Accessor<int>([](C& c) -> int& { return c.optimize.max_iters; }),
       [](const C& c) { return c.optimize.max_iters >= 0 ? "" : "must be non-negative"; }},
      {"optimize.tol_opt", Accessor<double>([](C& c) -> double& { return c.optimize.tol_opt; }),
       [](const C& c) { return positive(c.optimize.tol_opt); }},
      {"optimize.armijo_c", Accessor<double>([](C& c) -> double& { return c.optimize.armijo_c; }),
       [](const C& c) { return c.optimize.armijo_c > 0 && c.optimize.armijo_c < 1 ? "" : "must lie in (0, 1)"; }},
      {"optimize.backtrack", Accessor<double>([](C& c) -> double& { return c.optimize.backtrack; }),
       [](const C& c) { return c.optimize.backtrack > 0 && c.optimize.backtrack < 1 ? "" : "must lie in (0, 1)"; }},
      {"optimize.max_backtracks", Accessor<int>([](C& c) -> int& { return c.optimize.max_backtracks; }),
       [](const C& c) { return c.optimize.max_backtracks >= 1 ? "" : "must be >= 1"; }},
      {"optimize.initial_step", Accessor<double>([](C& c) -> double& { return c.optimize.initial_step; }),
       [](const C& c) { return positive(c.optimize.initial_step); }},
      {"output.directory", Accessor<std::string>([](C& c) -> std::string& { return c.output_dir; }),
       [](const C& c) { return c.output_dir.empty() ? "must not be empty" : ""; }},
      {"output.snapshot_stride", Accessor<int>([](C& c) -> int& { return c.snapshot_stride; }),
       [](const C& c) { return c.snapshot_stride >= 1 ? "" : "must be >= 1"; }},
      {"output.emit_vtk", Accessor<bool>([](C& c) -> bool& { return c.emit_vtk; }), {}},
      {"seed", Accessor<std::uint64_t>([](C& c) -> std::uint64_t& { return c.seed; }), {}},
  };
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::string at_line(const std::string& origin, int line) {
  return line > 0 ? origin + ":" + std::to_string(line) + ": " : origin + ": ";
}

template <class T>
T parse_value(const std::string& raw, const std::string& where);

template <>
inline double parse_value<double>(const std::string& raw, const std::string& where) {
  try {
    return parse_double(raw, "value");
  } catch (const ConfigError&) {
    throw ConfigError(where + "expected a number, got '" + raw + "'");
  }
}

template <>
inline int parse_value<int>(const std::string& raw, const std::string& where) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  NEMATIC_REQUIRE(used == raw.size() && used > 0 && v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(),
                  ConfigError, where + "expected an integer, got '" + raw + "'");
  return static_cast<int>(v);
}

template <>
inline std::uint64_t parse_value<std::uint64_t>(const std::string& raw, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!raw.empty() && raw[0] != '-') v = std::stoull(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  NEMATIC_REQUIRE(used == raw.size() && used > 0, ConfigError, where + "expected a non-negative integer, got '" + raw + "'");
  return v;
}

template <>
inline bool parse_value<bool>(const std::string& raw, const std::string& where) {
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError(where + "expected true or false, got '" + raw + "'");
}

template <>
inline std::string parse_value<std::string>(const std::string& raw, const std::string&) {
  return raw;
}

inline std::string show(double x) { return format_double(x); }
inline std::string show(int x) { return std::to_string(x); }
inline std::string show(std::uint64_t x) { return std::to_string(x); }
inline std::string show(bool x) { return x ? "true" : "false"; }
inline std::string show(const std::string& x) { return x; }

inline const ConfigKey* find_key(const std::string& key) {
  for (const ConfigKey& k : config_keys())
    if (k.key == key) return &k;
  return nullptr;
}

/// Sets one key from its raw text, validating type and constraint.
inline void set_key(RunConfig& c, const ConfigKey& k, const std::string& raw, const std::string& where) {
  std::visit([&](const auto& acc) {
    using T = std::decay_t<decltype(acc(c))>;
    acc(c) = parse_value<T>(raw, where);
  }, k.field);
  if (k.check) {
    const std::string err = k.check(c);
    NEMATIC_REQUIRE(err.empty(), ConfigError, where + k.key + " " + err);
  }
}

inline BoundaryControl load_control(const std::string& path, const GridSpec& g, const std::string& where) {
  try {
    return read_control_csv(path, g);
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  }
}

}  // namespace detail

/// Cross-key checks after every key is known: grid consistency, the CFL guard and
/// referenced control files.
inline void finalize_config(RunConfig& c, const std::string& origin) {
  if (!c.lines.count("grid.ny")) c.grid.ny = c.grid.nx;
  if (!c.lines.count("grid.ly") && c.lines.count("grid.lx")) c.grid.ly = c.grid.lx;
  try {
    c.grid.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(detail::at_line(origin, std::max(c.line_of("grid.t_final"), c.line_of("grid.dt"))) + e.what());
  }
  const double bound = cfl_bound(c.grid, c.physics);
  NEMATIC_REQUIRE(c.grid.dt <= bound, ConfigError,
                  detail::at_line(origin, c.line_of("grid.dt")) + "grid.dt = " + format_double(c.grid.dt) +
                      " violates the stability guard dt <= 0.25 h^2 min(1/nu, 1/eta) = " + format_double(bound));
  if (c.target != "manufactured")
    c.target_file = detail::load_control(c.target, c.grid, detail::at_line(origin, c.line_of("cost.target")));
  if (c.initial_control != "scenario" && c.initial_control != "h_ref")
    c.initial_file = detail::load_control(c.initial_control, c.grid, detail::at_line(origin, c.line_of("control.initial")));
}

inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "config") {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = detail::at_line(origin, lineno);
    const auto eq = line.find('=');
    NEMATIC_REQUIRE(eq != std::string::npos, ConfigError, where + "expected 'section.key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), raw = detail::trim(line.substr(eq + 1));
    const detail::ConfigKey* k = detail::find_key(key);
    NEMATIC_REQUIRE(k, ConfigError, where + "unknown key '" + key + "'");
    NEMATIC_REQUIRE(!c.lines.count(key), ConfigError,
                    where + "duplicate key '" + key + "' (first set on line " + std::to_string(c.line_of(key)) + ")");
    detail::set_key(c, *k, raw, where);
    c.lines[key] = lineno;
  }
  finalize_config(c, origin);
  return c;
}

inline RunConfig parse_config(const std::string& path) { return parse_config_text(read_file(path), path); }

/// Every key with its resolved value, in declaration order.
inline std::string resolved_config_text(const RunConfig& c) {
  RunConfig copy = c;
  std::string s;
  for (const detail::ConfigKey& k : detail::config_keys())
    std::visit([&](const auto& acc) { s += k.key + " = " + detail::show(acc(copy)) + "\n"; }, k.field);
  return s;
}

/// Subcommand-specific requirements: optimizing needs at least one non-zero weight.
inline void require_valid_for(const RunConfig& c, const std::string& subcommand, const std::string& origin = "config") {
  if (subcommand != "optimize") return;
  if (c.beta1 == 0 && c.beta2 == 0 && c.beta3 == 0 && c.beta4 == 0 && c.gamma == 0) {
    int line = 0;
    for (const char* k : {"cost.beta1", "cost.beta2", "cost.beta3", "cost.beta4", "cost.gamma"}) line = std::max(line, c.line_of(k));
    throw ConfigError(detail::at_line(origin, line) +
                      "optimize requires that the weights beta1..beta4 and gamma do not vanish simultaneously");
  }
}

}  // namespace nematic

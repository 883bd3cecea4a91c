#pragma once

// Experiment configuration, built-in function families and the experiment
// runner behind the czo command line.

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "czo/grid.hpp"
#include "czo/vector.hpp"

namespace czo {

inline constexpr const char* kVersion = "0.1.0";

/// A bad key, value, or registry name. Maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
};

/// Every accepted key with its default, in display order.
const std::vector<ConfigKey>& config_keys();
/// Experiment kinds accepted by run_experiment.
const std::vector<std::string>& experiment_kinds();

/// Parses `key=value` lines; blank lines and lines starting with '#' are
/// skipped. Throws ConfigError on malformed lines or unknown keys.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

struct ExperimentConfig {
  std::string kind;
  std::string curve;
  std::string kernel;
  std::size_t dim = 1;
  /// Grid box (also the sampling box for metric and partition runs).
  Box box;
  std::size_t n = 0;
  std::size_t out_n = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string function;
  std::vector<std::string> family;
  std::vector<double> epsilons;
  std::vector<double> t0_epsilons;
  double lambda = 0.0;
  std::string root;
  double theta = 0.0;
  int max_depth = 0;
  std::size_t lookups = 0;
  std::vector<std::string> multipliers;
  double cap = 0.0;
  std::vector<std::string> audits;
  std::size_t size_samples = 0;
  std::size_t triples = 0;
  std::vector<double> hormander_a;
  std::size_t hormander_grid = 0;
  double hormander_box_scale = 0.0;
  bool adjoint = false;
  std::string points;
  std::size_t cubes = 0;
  std::size_t probes = 0;
  std::size_t mc_samples = 0;
  int ladder_steps = 0;
  std::size_t threads = 0;
  std::string out;

  /// Effective key=value pairs after defaults and overrides, for the manifest.
  std::map<std::string, std::string> values;
};

/// Defaults, then `file` entries, then `overrides` ("key=value" strings).
/// Validates the kind and every value; throws ConfigError.
ExperimentConfig make_config(const std::string& kind, const std::map<std::string, std::string>& file,
                             const std::vector<std::string>& overrides);

/// "indicator:a:b" (1 on [a,b]^n), "bump:c:r" (smooth bump of radius r at
/// c(1,..,1), peak 1), "odd-bump:c:r" (bump at c minus bump at -c), "zero",
/// "csv:path" (a saved grid function; its geometry must match). Throws
/// ConfigError.
GridFunction make_function(const std::string& spec, const GridGeometry& geometry);

/// Multiplier by name: "0", "1", "sin", "cos", "x" (first coordinate), or a
/// decimal constant. Throws ConfigError.
std::function<double(const Vector&)> named_multiplier(const std::string& name);

struct RunResult {
  /// 0 pass, 1 assertion failure, 2 configuration error.
  int exit_code = 0;
  std::string message;
  std::vector<std::string> files;
};

/// Runs the configured experiment and writes its CSV reports and
/// manifest.txt under config.out. Never throws for configuration or
/// assertion problems; those are reported through the exit code.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace czo

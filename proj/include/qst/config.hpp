#pragma once

// Run configuration for the command-line tool: strict JSON parsing with
// defaults, and serialization of the fully resolved configuration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qst/robustness.hpp"

namespace qst {

/// Schema or value error; `path` is a JSON pointer to the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Experiment {
  RoundTrip,
  Transfer,
  Optimize,
  SweepDissipation,
  SweepDisorder,
  SweepDetuning,
  SweepLeakage,
  SweepStrayPhoton,
  FitTrends,
};

std::string to_string(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& name);

/// Optimum supplied by the user instead of being recomputed.
struct OptimumRecord {
  double g_ratio = 0.0;
  double kappa = 0.0;
  double tau_d = 0.0;
};

struct SweepConfig {
  std::vector<double> values;
  Dissipation which = Dissipation::QubitDecay;
  bool lindblad_check = false;
  int realizations = 100;
  bool symmetric = false;
  std::vector<double> alphas{1.0, 10.0};
  std::optional<double> anharmonicity;
  std::optional<std::vector<double>> weights;
};

struct RunConfig {
  Experiment experiment = Experiment::Transfer;
  /// Channel and qubits; g_max is filled per coupling ratio at run time.
  SystemSpec system;
  std::vector<double> g_ratios;
  std::optional<double> g_b;
  Scheme scheme = Scheme::SimultaneousIdentical;
  /// Round trip with constant coupling g_ratio instead of a pulse.
  bool constant_coupling = false;
  std::optional<double> t_final;
  /// Explicit pulses; missing ones are found by optimization.
  std::vector<OptimumRecord> pulses;
  OptimizeOptions optimize;
  IntegratorConfig integrator;
  SweepConfig sweep;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir = ".";
  std::vector<std::string> warnings;

  double g_ratio() const { return g_ratios.front(); }
  std::optional<OptimumRecord> pulse_for(double g_ratio) const;
};

/// Parses a configuration document. `experiment` overrides the file's
/// "experiment" key when given.
RunConfig parse_config(const nlohmann::json& doc,
                       std::optional<Experiment> experiment = std::nullopt);

/// Reads and parses a file; missing or malformed files raise ConfigError.
RunConfig load_config(const std::string& path,
                      std::optional<Experiment> experiment = std::nullopt);

/// Fully resolved configuration, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace qst

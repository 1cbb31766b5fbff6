#pragma once

// Experiment dispatch for the command-line tool. Every output file is staged
// in a scratch directory and moved into place only after the whole run
// succeeded.

#include <string>
#include <vector>

#include <json.hpp>

#include "qst/config.hpp"

namespace qst {

inline constexpr const char* kVersion = "0.1.0";

struct RunReport {
  std::vector<std::string> files;  // names relative to the output directory
  nlohmann::json meta;
};

/// Runs the configured experiment and writes its CSVs and meta.json to
/// cfg.out_dir. Throws ConfigError, NumericalError, or IoError.
RunReport run_experiment(const RunConfig& cfg);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// %.17g formatting used in every CSV.
std::string format_number(double x);

}  // namespace qst

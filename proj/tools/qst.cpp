// qst <experiment> --config <path> [--out <dir>] [--workers <n>] [--seed <u64>]

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qst/runner.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

int fail(Exit code, const std::string& kind, const std::string& message,
         const std::string& path = {}) {
  nlohmann::json err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  if (!path.empty()) err["error"]["path"] = path;
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state transfer through a multimode channel"};
  app.set_version_flag("--version", qst::kVersion);
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed = 0;
  app.add_option("experiment", experiment,
                 "round-trip | transfer | optimize | sweep-dissipation | sweep-disorder | "
                 "sweep-detuning | sweep-leakage | sweep-stray-photon | fit-trends")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* workers_opt =
      app.add_option("--workers", workers, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "base RNG seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "usage", e.what());
  }

  qst::RunConfig cfg;
  try {
    const auto e = qst::parse_experiment(experiment);
    if (!e) throw qst::ConfigError("", "unknown experiment \"" + experiment + "\"");
    cfg = qst::load_config(config_path, e);
    if (*out_opt) cfg.out_dir = out_dir;
    if (*workers_opt) {
      cfg.workers = workers;
      cfg.optimize.workers = workers;
    }
    if (*seed_opt) cfg.seed = seed;
  } catch (const qst::ConfigError& err) {
    return fail(kConfig, "config", err.what(), err.path());
  }
  for (const auto& w : cfg.warnings) {
    std::cerr << nlohmann::json{{"warning", w}}.dump() << '\n';
  }

  try {
    const auto report = qst::run_experiment(cfg);
    for (const auto& w : report.meta["warnings"]) {
      if (std::find(cfg.warnings.begin(), cfg.warnings.end(), w.get<std::string>()) ==
          cfg.warnings.end()) {
        std::cerr << nlohmann::json{{"warning", w}}.dump() << '\n';
      }
    }
    std::cout << report.meta["results"].dump(2) << '\n';
    return kOk;
  } catch (const qst::ConfigError& err) {
    return fail(kConfig, "config", err.what(), err.path());
  } catch (const std::invalid_argument& err) {
    return fail(kConfig, "config", err.what());
  } catch (const qst::NumericalError& err) {
    return fail(kNumerical, "numerical", err.what());
  } catch (const qst::IoError& err) {
    return fail(kIo, "io", err.what());
  } catch (const std::filesystem::filesystem_error& err) {
    return fail(kIo, "io", err.what());
  } catch (const std::exception& err) {
    return fail(kNumerical, "numerical", err.what());
  }
}

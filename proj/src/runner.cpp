#include "qst/runner.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qst/parallel.hpp"

namespace qst {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  void numbers(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double x : cells) s.push_back(format_number(x));
    row(s);
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// Collects output files in memory and publishes them together.
class Outputs {
 public:
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first);
    return out;
  }

  void publish(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path staging = dir / (".qst-staging-" + std::to_string(::getpid()));
    fs::remove_all(staging, ec);
    fs::create_directory(staging, ec);
    if (ec) throw IoError("cannot create " + staging.string() + ": " + ec.message());
    try {
      for (const auto& [name, content] : files_) {
        std::ofstream out(staging / name, std::ios::binary);
        out << content;
        out.close();
        if (!out) throw IoError("failed writing " + (staging / name).string());
      }
      for (const auto& [name, content] : files_) {
        fs::rename(staging / name, dir / name, ec);
        if (ec) throw IoError("cannot move " + name + " into " + dir.string() + ": " + ec.message());
      }
    } catch (...) {
      fs::remove_all(staging, ec);
      throw;
    }
    fs::remove_all(staging, ec);
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string mode_column(int k, int n_modes) {
  const int width = std::max(2, static_cast<int>(std::to_string(n_modes - 1).size()));
  std::string digits = std::to_string(k);
  return "mode_" + std::string(width - digits.size(), '0') + digits;
}

std::string timeseries_csv(const SimResult& r) {
  const auto n_modes = static_cast<int>(r.mode_pops.cols());
  std::vector<std::string> header{"t", "P_A", "P_B"};
  for (int k = 0; k < n_modes; ++k) header.push_back(mode_column(k, n_modes));
  if (r.has_f_level) header.push_back("P_f_A");
  if (r.has_vacuum) header.push_back("P_vac");
  Csv csv(header);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<double> row{r.times[i], r.p_a[i], r.p_b[i]};
    for (int k = 0; k < n_modes; ++k) row.push_back(r.mode_pops(static_cast<Eigen::Index>(i), k));
    if (r.has_f_level) row.push_back(r.p_f_a[i]);
    if (r.has_vacuum) row.push_back(r.p_vac[i]);
    csv.numbers(row);
  }
  return csv.text();
}

std::string scan_csv(const ScanGrid& g) {
  Csv csv({"kappa", "tau_d", "infidelity"});
  for (std::size_t i = 0; i < g.kappas.size(); ++i) {
    for (std::size_t j = 0; j < g.tau_ds.size(); ++j) {
      csv.numbers({g.kappas[i], g.tau_ds[j],
                   g.infidelity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    }
  }
  return csv.text();
}

std::string optimum_csv(const std::vector<OptimizationResult>& results) {
  Csv csv({"g_ratio", "kappa_opt", "tau_d_opt", "F_opt", "t_cycle"});
  for (const auto& r : results) {
    csv.numbers({r.g_ratio, r.kappa_opt, r.tau_d_opt, r.f_opt, r.t_cycle_opt});
  }
  return csv.text();
}

std::string sweep_csv(const std::vector<SweepResult>& sweeps) {
  Csv csv({"param_name", "param_value", "g_ratio", "infidelity", "stderr"});
  for (const auto& s : sweeps) {
    for (const auto& p : s.points) {
      csv.row({s.parameter, format_number(p.value), format_number(p.g_ratio),
               format_number(p.infidelity), format_number(p.stderr_)});
    }
  }
  return csv.text();
}

std::string fits_csv(const TrendFits& fits) {
  Csv csv({"model", "coeff_1", "coeff_2", "r_squared"});
  for (const FitResult* f : {&fits.kappa, &fits.t_cycle, &fits.tau_d}) {
    const std::string kind = f->model == FitModel::Exponential ? "exponential" : "logarithmic";
    csv.row({f->name + ":" + kind, format_number(f->coeff_1), format_number(f->coeff_2),
             format_number(f->r_squared)});
  }
  return csv.text();
}

json optimum_json(const OptimizationResult& r) {
  return {{"g_ratio", r.g_ratio},       {"kappa_opt", r.kappa_opt},
          {"tau_d_opt", r.tau_d_opt},   {"F_opt", r.f_opt},
          {"t_cycle", r.t_cycle_opt},   {"converged", r.converged},
          {"iterations", r.iterations}, {"scheme", to_string(r.scheme)}};
}

json sim_json(const SimResult& r) {
  json j{{"norm_drift", r.norm_drift},
         {"edge_pop_max", r.edge_pop_max},
         {"steps", r.stats.steps},
         {"rejected_steps", r.stats.rejected}};
  if (r.min_eigenvalue) j["min_eigenvalue"] = *r.min_eigenvalue;
  return j;
}

constexpr double kEdgeWarning = 1e-6;

struct Context {
  const RunConfig& cfg;
  Outputs outputs;
  json results = json::object();
  std::vector<std::string> warnings;
  std::vector<FrozenPulse> pulses;

  void check_edges(const SimResult& r) {
    if (r.edge_pop_max > kEdgeWarning) {
      warnings.push_back("edge-mode population " + format_number(r.edge_pop_max) +
                         " exceeds 1e-6; the mode ladder may be truncated too tightly");
    }
  }

  // Configured pulse for g, else an optimization (whose outputs are kept).
  FrozenPulse pulse_for(double g, std::vector<OptimizationResult>& optima) {
    const SystemSpec s = with_coupling(cfg.system, g);
    if (const auto p = cfg.pulse_for(g)) {
      const double f = transfer_fidelity(s, p->kappa, p->tau_d, cfg.scheme, cfg.integrator);
      return {g, p->kappa, p->tau_d, cfg.scheme, 1.0 - f};
    }
    optima.push_back(optimize_transfer(cfg.system, g, cfg.scheme, cfg.optimize));
    return FrozenPulse::from(optima.back());
  }

  void frozen_pulses() {
    std::vector<OptimizationResult> optima;
    for (double g : cfg.g_ratios) pulses.push_back(pulse_for(g, optima));
    if (!optima.empty()) outputs.add("optimum.csv", optimum_csv(optima));
    json arr = json::array();
    for (const auto& p : pulses) {
      arr.push_back({{"g_ratio", p.g_ratio},
                     {"kappa", p.kappa},
                     {"tau_d", p.tau_d},
                     {"intrinsic_infidelity", p.intrinsic_infidelity}});
    }
    results["frozen_pulses"] = arr;
  }
};

void run_round_trip_experiment(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double g = cfg.g_ratio();
  const SystemSpec s = with_coupling(cfg.system, g);
  RoundTripResult r;
  if (cfg.constant_coupling) {
    r = run_round_trip(s, g, cfg.t_final, cfg.integrator);
  } else {
    PulseParams pulse{g, 0.0, 0.0};
    if (const auto p = cfg.pulse_for(g)) {
      pulse.kappa = p->kappa;
      pulse.tau_d = p->tau_d;
    } else {
      const auto opt = optimize_round_trip(cfg.system, g, cfg.optimize);
      pulse.kappa = opt.kappa_opt;
      pulse.tau_d = opt.tau_d_opt;
      ctx.outputs.add("scan.csv", scan_csv(opt.scan));
      ctx.outputs.add("optimum.csv", optimum_csv({opt}));
      ctx.results["optimum"] = optimum_json(opt);
    }
    ctx.pulses.push_back({g, pulse.kappa, pulse.tau_d, cfg.scheme, 0.0});
    r = run_round_trip(s, pulse, cfg.t_final, cfg.integrator);
  }
  ctx.check_edges(r.sim);
  ctx.outputs.add("timeseries.csv", timeseries_csv(r.sim));
  auto peak_list = [&](const std::vector<std::size_t>& idx) {
    json out = json::array();
    for (auto i : idx) out.push_back({{"t", r.sim.times[i]}, {"P_A", r.sim.p_a[i]}});
    return out;
  };
  ctx.results["return_probability"] = r.return_probability;
  ctx.results["local_maxima"] = peak_list(find_peaks(r.sim.p_a));
  ctx.results["revival_peaks"] = peak_list(revival_peaks(r.sim, cfg.system.channel.nu_fsr));
  ctx.results["simulation"] = sim_json(r.sim);
}

void run_transfer_experiment(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double g = cfg.g_ratio();
  const SystemSpec s = with_coupling(cfg.system, g);
  double kappa = 0.0;
  double tau_d = 0.0;
  if (const auto p = cfg.pulse_for(g)) {
    kappa = p->kappa;
    tau_d = p->tau_d;
  } else {
    const auto opt = optimize_transfer(cfg.system, g, cfg.scheme, cfg.optimize);
    kappa = opt.kappa_opt;
    tau_d = opt.tau_d_opt;
    ctx.outputs.add("scan.csv", scan_csv(opt.scan));
    ctx.outputs.add("optimum.csv", optimum_csv({opt}));
    ctx.results["optimum"] = optimum_json(opt);
  }
  const auto schedule = schedule_for(s, kappa, tau_d, cfg.scheme);
  ctx.pulses.push_back({g, kappa, tau_d, cfg.scheme, 0.0});
  const auto r = run_transfer(s, schedule, cfg.integrator);
  ctx.check_edges(r.sim);
  ctx.outputs.add("timeseries.csv", timeseries_csv(r.sim));
  ctx.results["fidelity"] = r.fidelity;
  ctx.results["t_end"] = r.t_end;
  ctx.results["kappa"] = kappa;
  ctx.results["tau_d"] = tau_d;
  ctx.results["simulation"] = sim_json(r.sim);
}

void run_optimize_experiment(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto opt = optimize_transfer(cfg.system, cfg.g_ratio(), cfg.scheme, cfg.optimize);
  ctx.pulses.push_back(FrozenPulse::from(opt));
  ctx.outputs.add("scan.csv", scan_csv(opt.scan));
  ctx.outputs.add("optimum.csv", optimum_csv({opt}));
  ctx.results["optimum"] = optimum_json(opt);
  json trace = json::array();
  for (const auto& t : opt.trace) {
    trace.push_back({{"kappa", t.kappa}, {"tau_d", t.tau_d}, {"infidelity", t.infidelity}});
  }
  ctx.results["refinement_trace"] = trace;
}

void run_fit_experiment(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<OptimizationResult> optima;
  for (double g : cfg.g_ratios) {
    if (const auto p = cfg.pulse_for(g)) {
      const SystemSpec s = with_coupling(cfg.system, g);
      OptimizationResult r;
      r.g_ratio = g;
      r.scheme = cfg.scheme;
      r.kappa_opt = p->kappa;
      r.tau_d_opt = p->tau_d;
      r.f_opt = transfer_fidelity(s, p->kappa, p->tau_d, cfg.scheme, cfg.integrator);
      r.t_cycle_opt = schedule_for(s, p->kappa, p->tau_d, cfg.scheme).duration();
      optima.push_back(std::move(r));
    } else {
      optima.push_back(optimize_transfer(cfg.system, g, cfg.scheme, cfg.optimize));
    }
    ctx.pulses.push_back(FrozenPulse::from(optima.back()));
  }
  const auto fits = fit_trends(optima);
  ctx.outputs.add("optimum.csv", optimum_csv(optima));
  ctx.outputs.add("fits.csv", fits_csv(fits));
  json arr = json::array();
  for (const FitResult* f : {&fits.kappa, &fits.t_cycle, &fits.tau_d}) {
    arr.push_back({{"name", f->name},
                   {"model", f->model == FitModel::Exponential ? "exponential" : "logarithmic"},
                   {"coeff_1", f->coeff_1},
                   {"coeff_2", f->coeff_2},
                   {"residual_norm", f->residual_norm},
                   {"r_squared", f->r_squared}});
  }
  ctx.results["fits"] = arr;
}

void run_sweep_experiment(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ctx.frozen_pulses();
  SweepOptions opts{cfg.integrator, cfg.workers, cfg.sweep.lindblad_check};
  std::vector<SweepResult> sweeps;
  switch (cfg.experiment) {
    case Experiment::SweepDissipation:
      sweeps.push_back(sweep_dissipation(cfg.system, ctx.pulses, cfg.sweep.which,
                                         cfg.sweep.values, opts));
      break;
    case Experiment::SweepDisorder:
      sweeps.push_back(disorder_average(cfg.system, ctx.pulses, cfg.sweep.values,
                                        cfg.sweep.realizations, cfg.seed, opts));
      break;
    case Experiment::SweepDetuning:
      sweeps.push_back(
          sweep_detuning(cfg.system, ctx.pulses, cfg.sweep.values, cfg.sweep.symmetric, opts));
      break;
    case Experiment::SweepLeakage:
      sweeps = leakage_infidelity(cfg.system, ctx.pulses, cfg.sweep.values, cfg.sweep.alphas,
                                  opts);
      break;
    case Experiment::SweepStrayPhoton:
      sweeps.push_back(stray_photon_infidelity(
          cfg.system, ctx.pulses, cfg.sweep.values,
          StrayPhotonOptions{cfg.sweep.weights, cfg.sweep.anharmonicity}, opts));
      break;
    default:
      throw ConfigError("/experiment", "not a sweep");
  }
  ctx.outputs.add("sweep.csv", sweep_csv(sweeps));
  if (sweeps.front().lindblad_discrepancy) {
    ctx.results["lindblad_discrepancy"] = *sweeps.front().lindblad_discrepancy;
  }
}

}  // namespace

RunReport run_experiment(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Context ctx{cfg, {}, json::object(), cfg.warnings, {}};
  switch (cfg.experiment) {
    case Experiment::RoundTrip:
      run_round_trip_experiment(ctx);
      break;
    case Experiment::Transfer:
      run_transfer_experiment(ctx);
      break;
    case Experiment::Optimize:
      run_optimize_experiment(ctx);
      break;
    case Experiment::FitTrends:
      run_fit_experiment(ctx);
      break;
    default:
      run_sweep_experiment(ctx);
      break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunReport report;
  report.files = ctx.outputs.names();
  report.files.push_back("meta.json");
  report.meta = {{"tool", "qst"},
                 {"version", kVersion},
                 {"experiment", to_string(cfg.experiment)},
                 {"config", to_json(cfg)},
                 {"seeds", {{"base", cfg.seed}}},
                 {"workers", resolve_workers(cfg.workers)},
                 {"wall_time_s", wall},
                 {"pulse_checksum", ctx.pulses.empty() ? json(nullptr)
                                                       : json(pulse_checksum(ctx.pulses))},
                 {"warnings", ctx.warnings},
                 {"results", ctx.results},
                 {"files", report.files}};
  if (cfg.experiment == Experiment::SweepDisorder) {
    report.meta["seeds"]["per_realization"] = "base + realization index";
    report.meta["seeds"]["realizations"] = cfg.sweep.realizations;
  }
  ctx.outputs.add("meta.json", report.meta.dump(2) + "\n");
  ctx.outputs.publish(cfg.out_dir);
  return report;
}

}  // namespace qst

#pragma once

// Two-parameter pulse optimization: coarse (kappa, tau_d) scan, Nelder-Mead
// refinement, and empirical trend fits of the optima against g / nu_fsr.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qst/protocol.hpp"

namespace qst {

struct ScanRange {
  double kappa_min = 0.1;
  double kappa_max = 20.0;
  int kappa_points = 41;  // log-spaced
  double tau_d_min = 0.0;
  double tau_d_max = 2.0;
  int tau_d_points = 41;  // linear

  std::vector<double> kappas() const;
  std::vector<double> tau_ds() const;
};

struct ScanGrid {
  std::vector<double> kappas;
  std::vector<double> tau_ds;
  /// 1 - F, rows = kappa, cols = tau_d; NaN where propagation failed.
  Eigen::MatrixXd infidelity;
};

/// Evaluates transfer_fidelity on every cell, `workers` cells at a time.
ScanGrid grid_scan(const SystemSpec& spec, const ScanRange& range,
                   Scheme scheme = Scheme::SimultaneousIdentical,
                   const IntegratorConfig& cfg = {}, int workers = 1);

struct NelderMeadOptions {
  /// Converged when the largest vertex distance from the best vertex drops
  /// below this.
  double diameter_tol = 1e-4;
  int max_iterations = 500;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Best value after each iteration.
  std::vector<double> trace;
};

/// Downhill simplex minimization of f starting from x0 with initial vertex
/// offsets `step` along each axis.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opts = {});

struct RefinementStep {
  double kappa;
  double tau_d;
  double infidelity;
};

struct OptimizationResult {
  double g_ratio = 0.0;
  Scheme scheme = Scheme::SimultaneousIdentical;
  double kappa_opt = 0.0;
  double tau_d_opt = 0.0;
  double f_opt = 0.0;
  double t_cycle_opt = 0.0;
  ScanGrid scan;
  std::vector<RefinementStep> trace;
  bool converged = false;
  int iterations = 0;
};

struct OptimizeOptions {
  ScanRange range;
  NelderMeadOptions nelder_mead;
  IntegratorConfig integrator;
  int workers = 1;
  /// Cells or optima within this infidelity of the best count as tied; the
  /// fastest (smallest t_cycle) of a tie wins.
  double tie_tolerance = 1e-4;
  /// Grid local minima below this infidelity seed a refinement.
  double seed_infidelity = 0.1;
  /// Seeds are refined fastest first; the first whose refined infidelity is
  /// below this threshold is selected.
  double high_fidelity_infidelity = 1e-3;
  /// Maximum number of seeds refined in t_cycle order.
  int candidates = 12;
  /// Refinement bounds on kappa.
  double kappa_lower = 1e-3;
  double kappa_upper = 200.0;
};

/// Nelder-Mead on (ln kappa, tau_d) with tau_d clamped at 0. Never returns a
/// point worse than `start`.
OptimizationResult refine_optimum(const SystemSpec& spec, double kappa0,
                                  double tau_d0,
                                  Scheme scheme = Scheme::SimultaneousIdentical,
                                  const OptimizeOptions& opts = {});

/// Full optimization for one coupling ratio (sets g_max of both qubits).
OptimizationResult optimize_transfer(const SystemSpec& spec, double g_ratio,
                                     Scheme scheme = Scheme::SimultaneousIdentical,
                                     const OptimizeOptions& opts = {});

/// Same search for the single-qubit round trip: maximizes the return
/// probability of qubit A under one pulse. f_opt holds that probability.
OptimizationResult optimize_round_trip(const SystemSpec& spec, double g_ratio,
                                       const OptimizeOptions& opts = {});

/// Grid cells that are no worse than any of their (up to 8) neighbours,
/// sorted by infidelity. Pairs are (kappa index, tau_d index).
std::vector<std::pair<int, int>> grid_local_minima(const ScanGrid& grid);

enum class FitModel { Exponential, Logarithmic };

struct FitResult {
  FitModel model = FitModel::Exponential;
  std::string name;
  /// Exponential: y = c1 * exp(c2 * x). Logarithmic: y = c1 * ln(x) + c2.
  double coeff_1 = 0.0;
  double coeff_2 = 0.0;
  double residual_norm = 0.0;
  double r_squared = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;

  double operator()(double x) const;
};

/// Exponential fit done as linear least squares on ln y. Residuals and R^2
/// are reported on y itself.
FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y);
FitResult fit_logarithmic(const std::vector<double>& x, const std::vector<double>& y);

struct TrendFits {
  FitResult kappa;
  FitResult t_cycle;
  FitResult tau_d;
};

TrendFits fit_trends(const std::vector<OptimizationResult>& results);

struct InterpolatedPulse {
  double kappa = 0.0;
  double tau_d = 0.0;
  bool extrapolated = false;
  bool clamped = false;
};

InterpolatedPulse interpolate_optimal(const TrendFits& fits, double g_ratio);

}  // namespace qst

#include "qst/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qst/parallel.hpp"

namespace qst {

std::vector<double> ScanRange::kappas() const {
  if (kappa_points < 2 || !(kappa_min > 0.0) || !(kappa_max > kappa_min)) {
    throw std::invalid_argument("kappa range must be positive with >= 2 points");
  }
  std::vector<double> out(static_cast<std::size_t>(kappa_points));
  const double ratio = std::log(kappa_max / kappa_min);
  for (int i = 0; i < kappa_points; ++i) {
    out[i] = kappa_min * std::exp(ratio * i / (kappa_points - 1));
  }
  out.back() = kappa_max;
  return out;
}

std::vector<double> ScanRange::tau_ds() const {
  if (tau_d_points < 2 || tau_d_min < 0.0 || !(tau_d_max > tau_d_min)) {
    throw std::invalid_argument("tau_d range must be non-negative with >= 2 points");
  }
  std::vector<double> out(static_cast<std::size_t>(tau_d_points));
  for (int i = 0; i < tau_d_points; ++i) {
    out[i] = tau_d_min + (tau_d_max - tau_d_min) * i / (tau_d_points - 1);
  }
  out.back() = tau_d_max;
  return out;
}

namespace {

// Infidelity-like objective on (kappa, tau_d); failures map to 1.
using PointObjective = std::function<double(double, double)>;

ScanGrid scan_objective(const PointObjective& f, const ScanRange& range, int workers) {
  ScanGrid grid{range.kappas(), range.tau_ds(), {}};
  const auto nk = static_cast<Eigen::Index>(grid.kappas.size());
  const auto nt = static_cast<Eigen::Index>(grid.tau_ds.size());
  grid.infidelity.resize(nk, nt);
  parallel_for(static_cast<std::size_t>(nk * nt), workers, [&](std::size_t cell) {
    const auto i = static_cast<Eigen::Index>(cell) / nt;
    const auto j = static_cast<Eigen::Index>(cell) % nt;
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      value = f(grid.kappas[i], grid.tau_ds[j]);
    } catch (const NumericalError&) {
      // recorded as missing
    }
    grid.infidelity(i, j) = value;
  });
  return grid;
}

}  // namespace

ScanGrid grid_scan(const SystemSpec& spec, const ScanRange& range, Scheme scheme,
                   const IntegratorConfig& cfg, int workers) {
  const TransferModel model(spec);
  return scan_objective(
      [&](double kappa, double tau_d) {
        return 1.0 - model.fidelity(schedule_for(spec, kappa, tau_d, scheme), cfg);
      },
      range, workers);
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  NelderMeadResult result;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (Eigen::Index i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
      d = std::max(d, (simplex[i] - simplex[0]).norm());
    }
    return d;
  };

  sort_simplex();
  while (result.iterations < opts.max_iterations) {
    if (diameter() < opts.diameter_tol) {
      result.converged = true;
      break;
    }
    ++result.iterations;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);
    const Eigen::VectorXd& worst = simplex[n];

    const Eigen::VectorXd reflected = centroid + (centroid - worst);
    const double fr = eval(reflected);
    if (fr < values[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (worst - centroid));
      const double fc = eval(contracted);
      if (fc < (outside ? fr : values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
    result.trace.push_back(values[0]);
  }
  if (!result.converged && diameter() < opts.diameter_tol) result.converged = true;
  result.x = simplex[0];
  result.value = values[0];
  return result;
}

namespace {

PointObjective transfer_objective(const TransferModel& model, Scheme scheme,
                                  const IntegratorConfig& cfg) {
  return [&model, scheme, cfg](double kappa, double tau_d) {
    try {
      return 1.0 - model.fidelity(schedule_for(model.spec(), kappa, tau_d, scheme), cfg);
    } catch (const NumericalError&) {
      return 1.0;
    }
  };
}

PointObjective round_trip_objective(const SystemSpec& spec, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.samples = 2;
  return [spec, c](double kappa, double tau_d) {
    try {
      return 1.0 - run_round_trip(spec, PulseParams{spec.qubit_a.g_max, kappa, tau_d},
                                  std::nullopt, c)
                       .return_probability;
    } catch (const NumericalError&) {
      return 1.0;
    }
  };
}

double log_spacing(const ScanRange& r) {
  return std::log(r.kappa_max / r.kappa_min) / std::max(1, r.kappa_points - 1);
}

double linear_spacing(const ScanRange& r) {
  return (r.tau_d_max - r.tau_d_min) / std::max(1, r.tau_d_points - 1);
}

using CycleTime = std::function<double(double, double)>;

OptimizationResult refine_with(const PointObjective& objective, const CycleTime& cycle,
                               double kappa0, double tau_d0,
                               const OptimizeOptions& opts) {
  OptimizationResult out;
  auto kappa_of = [&](double log_kappa) {
    return std::clamp(std::exp(log_kappa), opts.kappa_lower, opts.kappa_upper);
  };
  const double start_value = objective(kappa0, tau_d0);
  out.trace.push_back({kappa0, tau_d0, start_value});

  Eigen::VectorXd x0(2);
  x0 << std::log(kappa0), tau_d0;
  Eigen::VectorXd step(2);
  step << 0.5 * log_spacing(opts.range), 0.5 * linear_spacing(opts.range);
  const auto nm = nelder_mead(
      [&](const Eigen::VectorXd& x) {
        return objective(kappa_of(x[0]), std::max(x[1], 0.0));
      },
      x0, step, opts.nelder_mead);

  double kappa = kappa_of(nm.x[0]);
  double tau_d = std::max(nm.x[1], 0.0);
  double value = nm.value;
  if (!(value <= start_value)) {
    kappa = kappa0;
    tau_d = tau_d0;
    value = start_value;
  }
  out.trace.push_back({kappa, tau_d, value});
  out.kappa_opt = kappa;
  out.tau_d_opt = tau_d;
  out.f_opt = 1.0 - value;
  out.t_cycle_opt = cycle(kappa, tau_d);
  out.converged = nm.converged;
  out.iterations = nm.iterations;
  return out;
}

// Grid scan, then refinement of promising local minima in order of
// increasing cycle time. The first refined optimum below the high-fidelity
// threshold wins; otherwise the best refined one, ties going to the fastest.
OptimizationResult scan_and_refine(const PointObjective& objective, const CycleTime& cycle,
                                   const OptimizeOptions& opts) {
  ScanGrid grid = scan_objective(objective, opts.range, opts.workers);
  const auto& m = grid.infidelity;
  auto t_cycle_of = [&](std::pair<int, int> c) {
    return cycle(grid.kappas[c.first], grid.tau_ds[c.second]);
  };

  auto minima = grid_local_minima(grid);
  if (minima.empty()) throw NumericalError("every grid cell failed", 0.0);
  const double best = m(minima.front().first, minima.front().second);

  // Fastest cell tied with the global best.
  std::pair<int, int> fastest_tied = minima.front();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const std::pair<int, int> c{static_cast<int>(i), static_cast<int>(j)};
      if (m(i, j) <= best + opts.tie_tolerance && t_cycle_of(c) < t_cycle_of(fastest_tied)) {
        fastest_tied = c;
      }
    }
  }

  std::vector<std::pair<int, int>> seeds;
  for (const auto& c : minima) {
    if (m(c.first, c.second) < opts.seed_infidelity) seeds.push_back(c);
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [&](auto a, auto b) { return t_cycle_of(a) < t_cycle_of(b); });
  if (static_cast<int>(seeds.size()) > opts.candidates) {
    seeds.resize(static_cast<std::size_t>(std::max(0, opts.candidates)));
  }
  const std::size_t fast_seeds = seeds.size();
  for (const auto& c : {fastest_tied, minima.front()}) {
    if (std::find(seeds.begin(), seeds.end(), c) == seeds.end()) seeds.push_back(c);
  }

  std::vector<OptimizationResult> refined;
  const OptimizationResult* chosen = nullptr;
  // Batches of `workers` seeds; the first qualifying seed in t_cycle order
  // wins, so the outcome does not depend on the batch size.
  const auto batch = static_cast<std::size_t>(resolve_workers(opts.workers));
  refined.reserve(seeds.size());
  for (std::size_t first = 0; first < seeds.size() && chosen == nullptr; first += batch) {
    const std::size_t last = std::min(seeds.size(), first + batch);
    refined.resize(last);
    parallel_for(last - first, opts.workers, [&](std::size_t k) {
      const auto [i, j] = seeds[first + k];
      refined[first + k] = refine_with(objective, cycle, grid.kappas[i], grid.tau_ds[j], opts);
    });
    for (std::size_t k = first; k < last && k < fast_seeds; ++k) {
      if (1.0 - refined[k].f_opt < opts.high_fidelity_infidelity) {
        chosen = &refined[k];
        break;
      }
    }
  }
  if (chosen == nullptr) {
    double best_refined = 1.0;
    for (const auto& r : refined) best_refined = std::min(best_refined, 1.0 - r.f_opt);
    for (const auto& r : refined) {
      if (1.0 - r.f_opt <= best_refined + opts.tie_tolerance &&
          (chosen == nullptr || r.t_cycle_opt < chosen->t_cycle_opt)) {
        chosen = &r;
      }
    }
  }
  OptimizationResult out = *chosen;
  out.scan = std::move(grid);
  return out;
}

}  // namespace

OptimizationResult refine_optimum(const SystemSpec& spec, double kappa0,
                                  double tau_d0, Scheme scheme,
                                  const OptimizeOptions& opts) {
  if (!(kappa0 > 0.0) || tau_d0 < 0.0) {
    throw std::invalid_argument("refinement start must have kappa > 0, tau_d >= 0");
  }
  const TransferModel model(spec);
  auto out = refine_with(
      transfer_objective(model, scheme, opts.integrator),
      [&](double k, double t) { return schedule_for(spec, k, t, scheme).duration(); },
      kappa0, tau_d0, opts);
  out.g_ratio = spec.qubit_a.g_max;
  out.scheme = scheme;
  return out;
}

std::vector<std::pair<int, int>> grid_local_minima(const ScanGrid& grid) {
  const auto& m = grid.infidelity;
  std::vector<std::pair<int, int>> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v)) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const Eigen::Index a = i + di;
          const Eigen::Index b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= m.rows() || b >= m.cols()) {
            continue;
          }
          if (std::isfinite(m(a, b)) && m(a, b) < v) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::stable_sort(out.begin(), out.end(), [&](auto a, auto b) {
    return m(a.first, a.second) < m(b.first, b.second);
  });
  return out;
}

OptimizationResult optimize_transfer(const SystemSpec& spec, double g_ratio,
                                     Scheme scheme, const OptimizeOptions& opts) {
  if (!(g_ratio > 0.0)) throw std::invalid_argument("g_ratio must be positive");
  const SystemSpec s = with_coupling(spec, g_ratio);
  const TransferModel model(s);
  auto out = scan_and_refine(
      transfer_objective(model, scheme, opts.integrator),
      [&](double k, double t) { return schedule_for(s, k, t, scheme).duration(); }, opts);
  out.g_ratio = g_ratio;
  out.scheme = scheme;
  return out;
}

OptimizationResult optimize_round_trip(const SystemSpec& spec, double g_ratio,
                                       const OptimizeOptions& opts) {
  if (!(g_ratio > 0.0)) throw std::invalid_argument("g_ratio must be positive");
  const SystemSpec s = with_coupling(spec, g_ratio);
  auto out = scan_and_refine(
      round_trip_objective(s, opts.integrator),
      [&](double k, double t) { return PulseParams{g_ratio, k, t}.t_cycle(); }, opts);
  out.g_ratio = g_ratio;
  return out;
}

double FitResult::operator()(double x) const {
  return model == FitModel::Exponential ? coeff_1 * std::exp(coeff_2 * x)
                                        : coeff_1 * std::log(x) + coeff_2;
}

namespace {

// Least-squares line v = slope * u + intercept.
std::pair<double, double> fit_line(const std::vector<double>& u,
                                   const std::vector<double>& v) {
  if (u.size() != v.size() || u.size() < 2) {
    throw std::invalid_argument("fit needs at least two paired points");
  }
  const auto n = static_cast<Eigen::Index>(u.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = u[i];
    design(i, 1) = 1.0;
    rhs[i] = v[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw std::invalid_argument("singular fit: x values are identical");
  const Eigen::Vector2d c = qr.solve(rhs);
  return {c[0], c[1]};
}

void score(FitResult& fit, const std::vector<double>& x, const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit(x[i]);
    ss_res += r * r;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.residual_norm = std::sqrt(ss_res);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  fit.x_min = *std::min_element(x.begin(), x.end());
  fit.x_max = *std::max_element(x.begin(), x.end());
}

}  // namespace

FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> log_y(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw std::invalid_argument("exponential fit needs y > 0");
    log_y[i] = std::log(y[i]);
  }
  const auto [slope, intercept] = fit_line(x, log_y);
  FitResult fit;
  fit.model = FitModel::Exponential;
  fit.coeff_1 = std::exp(intercept);
  fit.coeff_2 = slope;
  score(fit, x, y);
  return fit;
}

FitResult fit_logarithmic(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> log_x(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::invalid_argument("logarithmic fit needs x > 0");
    log_x[i] = std::log(x[i]);
  }
  const auto [slope, intercept] = fit_line(log_x, y);
  FitResult fit;
  fit.model = FitModel::Logarithmic;
  fit.coeff_1 = slope;
  fit.coeff_2 = intercept;
  score(fit, x, y);
  return fit;
}

TrendFits fit_trends(const std::vector<OptimizationResult>& results) {
  if (results.size() < 3) throw std::invalid_argument("trend fits need >= 3 optima");
  std::vector<double> g, kappa, t_cycle, tau_d;
  for (const auto& r : results) {
    g.push_back(r.g_ratio);
    kappa.push_back(r.kappa_opt);
    t_cycle.push_back(r.t_cycle_opt);
    tau_d.push_back(r.tau_d_opt);
  }
  std::vector<double> sorted = g;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("trend fits need distinct g_ratio values");
  }
  TrendFits fits{fit_exponential(g, kappa), fit_exponential(g, t_cycle),
                 fit_logarithmic(g, tau_d)};
  fits.kappa.name = "kappa_opt";
  fits.t_cycle.name = "t_cycle";
  fits.tau_d.name = "tau_d_opt";
  return fits;
}

InterpolatedPulse interpolate_optimal(const TrendFits& fits, double g_ratio) {
  InterpolatedPulse p;
  p.kappa = fits.kappa(g_ratio);
  p.tau_d = fits.tau_d(g_ratio);
  p.extrapolated = g_ratio < fits.kappa.x_min || g_ratio > fits.kappa.x_max;
  if (p.tau_d < 0.0) {
    p.tau_d = 0.0;
    p.clamped = true;
  }
  return p;
}

}  // namespace qst

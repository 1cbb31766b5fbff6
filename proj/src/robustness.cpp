#include "qst/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "qst/parallel.hpp"

namespace qst {

FrozenPulse FrozenPulse::from(const OptimizationResult& r) {
  return {r.g_ratio, r.kappa_opt, r.tau_d_opt, r.scheme, 1.0 - r.f_opt};
}

std::string pulse_checksum(const std::vector<FrozenPulse>& pulses) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : pulses) {
    for (double v : {p.g_ratio, p.kappa, p.tau_d}) mix(&v, sizeof v);
    const auto scheme = static_cast<std::int32_t>(p.scheme);
    mix(&scheme, sizeof scheme);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

TransferSchedule schedule_of(const FrozenPulse& p) {
  return make_schedule(p.scheme, p.g_ratio, p.kappa, p.tau_d);
}

void check_pulses(const std::vector<FrozenPulse>& pulses) {
  if (pulses.empty()) throw std::invalid_argument("no frozen pulses given");
  for (const auto& p : pulses) {
    if (!(p.g_ratio > 0.0) || !(p.kappa > 0.0) || p.tau_d < 0.0) {
      throw std::invalid_argument("frozen pulse needs g_ratio > 0, kappa > 0, tau_d >= 0");
    }
  }
}

std::vector<double> sorted_values(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("sweep values are empty");
  std::sort(v.begin(), v.end());
  return v;
}

void sort_points(std::vector<SweepPoint>& points) {
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.g_ratio != b.g_ratio ? a.g_ratio < b.g_ratio : a.value < b.value;
  });
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Grid of (pulse, value) points, each evaluated by `point(spec_g, pulse, value)`.
template <class Fn>
SweepResult sweep(const std::string& name, const SystemSpec& spec,
                  const std::vector<FrozenPulse>& pulses, const std::vector<double>& values,
                  int workers, Fn&& point) {
  check_pulses(pulses);
  const auto vals = sorted_values(values);
  SweepResult out;
  out.parameter = name;
  out.pulse_checksum = pulse_checksum(pulses);
  out.points.resize(pulses.size() * vals.size());
  parallel_for(out.points.size(), workers, [&](std::size_t n) {
    const auto& p = pulses[n / vals.size()];
    const double v = vals[n % vals.size()];
    out.points[n] = {v, p.g_ratio, clamp01(point(with_coupling(spec, p.g_ratio), p, v)), 0.0};
  });
  sort_points(out.points);
  return out;
}

}  // namespace

SweepResult sweep_dissipation(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                              Dissipation which, const std::vector<double>& values,
                              const SweepOptions& opts) {
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("loss rates must be non-negative");
  }
  auto lossy = [which](SystemSpec s, double v) {
    if (which == Dissipation::QubitDecay) {
      s.qubit_a.gamma = v;
      s.qubit_b.gamma = v;
    } else {
      s.channel.kappa_c = v;
    }
    return s;
  };
  SweepResult out = sweep(
      which == Dissipation::QubitDecay ? "gamma" : "kappa_c", spec, pulses, values,
      opts.workers, [&](const SystemSpec& s, const FrozenPulse& p, double v) {
        const SystemSpec open = lossy(s, v);
        const TransferModel model(open);
        return 1.0 - model.fidelity(schedule_of(p), opts.integrator);
      });
  if (opts.lindblad_check) {
    std::vector<double> diffs(out.points.size(), 0.0);
    parallel_for(out.points.size(), opts.workers, [&](std::size_t n) {
      const auto& pt = out.points[n];
      const auto it = std::find_if(pulses.begin(), pulses.end(),
                                   [&](const auto& p) { return p.g_ratio == pt.g_ratio; });
      const SystemSpec open = lossy(with_coupling(spec, pt.g_ratio), pt.value);
      IntegratorConfig c = opts.integrator;
      c.samples = 2;
      const double f = TransferModel(open, OpenSolver::Lindblad).run(schedule_of(*it), c).fidelity;
      diffs[n] = std::abs((1.0 - pt.infidelity) - f);
    });
    out.lindblad_discrepancy = *std::max_element(diffs.begin(), diffs.end());
  }
  return out;
}

SweepResult disorder_average(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                             const std::vector<double>& deltas, int realizations,
                             std::uint64_t seed, const SweepOptions& opts) {
  check_pulses(pulses);
  if (realizations < 1) throw std::invalid_argument("need at least one disorder realization");
  for (double d : deltas) {
    if (d < 0.0) throw std::invalid_argument("disorder strength must be non-negative");
  }
  const auto vals = sorted_values(deltas);
  const auto n_real = static_cast<std::size_t>(realizations);
  const std::size_t cells = pulses.size() * vals.size();
  std::vector<double> samples(cells * n_real);
  parallel_for(samples.size(), opts.workers, [&](std::size_t n) {
    const std::size_t cell = n / n_real;
    const std::size_t r = n % n_real;
    const auto& p = pulses[cell / vals.size()];
    SystemSpec s = with_coupling(spec, p.g_ratio);
    s.channel.disorder_offsets =
        sample_disorder(vals[cell % vals.size()], s.channel.n_modes, seed + r);
    samples[n] = clamp01(1.0 - TransferModel(s).fidelity(schedule_of(p), opts.integrator));
  });

  SweepResult out;
  out.parameter = "delta";
  out.pulse_checksum = pulse_checksum(pulses);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double* x = samples.data() + cell * n_real;
    const double mean = std::accumulate(x, x + n_real, 0.0) / static_cast<double>(n_real);
    double var = 0.0;
    for (std::size_t r = 0; r < n_real; ++r) var += (x[r] - mean) * (x[r] - mean);
    const double err =
        n_real > 1 ? std::sqrt(var / static_cast<double>(n_real - 1) / static_cast<double>(n_real))
                   : 0.0;
    out.points.push_back(
        {vals[cell % vals.size()], pulses[cell / vals.size()].g_ratio, mean, err});
  }
  sort_points(out.points);
  return out;
}

SweepResult sweep_detuning(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                           const std::vector<double>& values, bool symmetric,
                           const SweepOptions& opts) {
  return sweep("delta_omega", spec, pulses, values, opts.workers,
               [&](SystemSpec s, const FrozenPulse& p, double dw) {
                 if (symmetric) {
                   s.qubit_a.detuning -= 0.5 * dw;
                   s.qubit_b.detuning += 0.5 * dw;
                 } else {
                   s.qubit_b.detuning += dw;
                 }
                 return 1.0 - TransferModel(s).fidelity(schedule_of(p), opts.integrator);
               });
}

namespace {

void require_lossless(const SystemSpec& spec) {
  if (spec.qubit_a.gamma > 0.0 || spec.qubit_b.gamma > 0.0 || spec.channel.kappa_c > 0.0) {
    throw std::invalid_argument("mixture studies assume a lossless system");
  }
}

SystemSpec three_level(SystemSpec s, double alpha) {
  for (QubitSpec* q : {&s.qubit_a, &s.qubit_b}) {
    q->levels = 3;
    q->anharmonicity = alpha;
  }
  return s;
}

// Final P_B(e) starting from `start` inside the given excitation manifold.
double final_p_b(const SystemSpec& spec, int manifold, const BasisState& start,
                 const TransferSchedule& schedule, const IntegratorConfig& cfg) {
  const Basis basis = build_basis(spec, {manifold});
  const HamiltonianMatrix h = build_hamiltonian(spec, basis);
  IntegratorConfig c = cfg;
  c.samples = 2;
  return propagate_pure(basis, h, Drive::transfer(schedule), basis_vector(basis, start),
                        schedule.duration(), c)
      .final_p_b();
}

std::string format_alpha(double alpha) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "epsilon_f[alpha=%g]", alpha);
  return buf;
}

void check_epsilons(const std::vector<double>& eps) {
  for (double e : eps) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
}

}  // namespace

LeakageBranches leakage_branches(const SystemSpec& spec, const FrozenPulse& pulse,
                                 double alpha, const IntegratorConfig& cfg) {
  require_lossless(spec);
  const SystemSpec s = three_level(with_coupling(spec, pulse.g_ratio), alpha);
  const auto schedule = schedule_of(pulse);
  return {1.0 - final_p_b(s, 1, BasisState::exc_a(1), schedule, cfg),
          1.0 - final_p_b(s, 2, BasisState::exc_a(2), schedule, cfg)};
}

std::vector<SweepResult> leakage_infidelity(const SystemSpec& spec,
                                            const std::vector<FrozenPulse>& pulses,
                                            const std::vector<double>& epsilons,
                                            const std::vector<double>& alphas,
                                            const SweepOptions& opts) {
  check_pulses(pulses);
  check_epsilons(epsilons);
  if (alphas.empty()) throw std::invalid_argument("no anharmonicity values given");
  const auto eps = sorted_values(epsilons);
  std::vector<LeakageBranches> branches(pulses.size() * alphas.size());
  parallel_for(branches.size(), opts.workers, [&](std::size_t n) {
    branches[n] = leakage_branches(spec, pulses[n / alphas.size()], alphas[n % alphas.size()],
                                   opts.integrator);
  });
  std::vector<SweepResult> out;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    SweepResult r;
    r.parameter = format_alpha(alphas[a]);
    r.pulse_checksum = pulse_checksum(pulses);
    for (std::size_t p = 0; p < pulses.size(); ++p) {
      const auto& b = branches[p * alphas.size() + a];
      for (double e : eps) {
        r.points.push_back({e, pulses[p].g_ratio, clamp01((1.0 - e) * b.e + e * b.f), 0.0});
      }
    }
    sort_points(r.points);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<double> resolve_weights(const StrayPhotonOptions& stray, int n_modes) {
  if (!stray.weights) return std::vector<double>(n_modes, 1.0 / n_modes);
  const auto& w = *stray.weights;
  if (static_cast<int>(w.size()) != n_modes) {
    throw std::invalid_argument("photon weights must have one entry per mode");
  }
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("photon weights must be non-negative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("photon weights must sum to 1");
  return w;
}

}  // namespace

StrayPhotonBranches stray_photon_branches(const SystemSpec& spec, const FrozenPulse& pulse,
                                          const StrayPhotonOptions& stray,
                                          const SweepOptions& opts) {
  require_lossless(spec);
  SystemSpec s = with_coupling(spec, pulse.g_ratio);
  if (stray.anharmonicity) s = three_level(s, *stray.anharmonicity);
  const auto schedule = schedule_of(pulse);
  StrayPhotonBranches out;
  out.ideal = final_p_b(s, 1, BasisState::exc_a(1), schedule, opts.integrator);

  const int n = s.channel.n_modes;
  const Basis basis = build_basis(s, {2});
  const HamiltonianMatrix h = build_hamiltonian(s, basis);
  const Drive drive = Drive::transfer(schedule);
  IntegratorConfig c = opts.integrator;
  c.samples = 2;
  out.per_mode.resize(static_cast<std::size_t>(n));
  parallel_for(out.per_mode.size(), opts.workers, [&](std::size_t k) {
    const auto psi0 = basis_vector(basis, BasisState::exc_a_photon(static_cast<int>(k)));
    out.per_mode[k] = propagate_pure(basis, h, drive, psi0, schedule.duration(), c).final_p_b();
  });
  return out;
}

double stray_photon_mix(const StrayPhotonBranches& b, const std::vector<double>& weights,
                        double epsilon) {
  if (weights.size() != b.per_mode.size()) {
    throw std::invalid_argument("photon weights must have one entry per mode");
  }
  const double contaminated =
      std::inner_product(weights.begin(), weights.end(), b.per_mode.begin(), 0.0);
  return clamp01(1.0 - ((1.0 - epsilon) * b.ideal + epsilon * contaminated));
}

SweepResult stray_photon_infidelity(const SystemSpec& spec,
                                    const std::vector<FrozenPulse>& pulses,
                                    const std::vector<double>& epsilons,
                                    const StrayPhotonOptions& stray,
                                    const SweepOptions& opts) {
  check_pulses(pulses);
  check_epsilons(epsilons);
  const auto eps = sorted_values(epsilons);
  const auto weights = resolve_weights(stray, spec.channel.n_modes);
  SweepResult out;
  out.parameter = "epsilon_p";
  out.pulse_checksum = pulse_checksum(pulses);
  for (const auto& p : pulses) {
    const auto b = stray_photon_branches(spec, p, stray, opts);
    for (double e : eps) out.points.push_back({e, p.g_ratio, stray_photon_mix(b, weights, e), 0.0});
  }
  sort_points(out.points);
  return out;
}

}  // namespace qst

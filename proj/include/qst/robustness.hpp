#pragma once

// Imperfection studies with pulses frozen at the ideal-case optima.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qst/optimize.hpp"

namespace qst {

/// Optimal pulse for one coupling ratio, taken from the ideal optimization.
struct FrozenPulse {
  double g_ratio = 0.0;
  double kappa = 0.0;
  double tau_d = 0.0;
  Scheme scheme = Scheme::SimultaneousIdentical;
  /// 1 - F of the ideal (lossless, clean) system.
  double intrinsic_infidelity = 0.0;

  static FrozenPulse from(const OptimizationResult& r);
};

/// FNV-1a hash of the pulse parameters as 16 hex digits.
std::string pulse_checksum(const std::vector<FrozenPulse>& pulses);

struct SweepPoint {
  double value = 0.0;
  double g_ratio = 0.0;
  double infidelity = 0.0;
  double stderr_ = 0.0;  // zero unless averaged
};

struct SweepResult {
  std::string parameter;
  /// Sorted by g_ratio, then by parameter value ascending.
  std::vector<SweepPoint> points;
  std::string pulse_checksum;
  /// Largest |F_nonhermitian - F_lindblad| over cross-checked points.
  std::optional<double> lindblad_discrepancy;
};

struct SweepOptions {
  IntegratorConfig integrator;
  int workers = 1;
  /// Re-run every point with the Lindblad solver and record the discrepancy.
  bool lindblad_check = false;
};

enum class Dissipation { QubitDecay, CavityLoss };

/// gamma on both qubits, or a uniform kappa_c on every mode.
SweepResult sweep_dissipation(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                              Dissipation which, const std::vector<double>& values,
                              const SweepOptions& opts = {});

/// Mean and standard error over `realizations` disorder draws; draw r uses
/// seed + r for every (g_ratio, delta).
SweepResult disorder_average(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                             const std::vector<double>& deltas, int realizations,
                             std::uint64_t seed, const SweepOptions& opts = {});

/// Static detuning between the qubits: on qubit B only, or split +-dw/2.
SweepResult sweep_detuning(const SystemSpec& spec, const std::vector<FrozenPulse>& pulses,
                           const std::vector<double>& values, bool symmetric = false,
                           const SweepOptions& opts = {});

/// Infidelities of the two branches of an |e>/|f> mixture on qubit A.
struct LeakageBranches {
  double e = 0.0;
  double f = 0.0;
};

/// Both qubits three-level with anharmonicity `alpha`.
LeakageBranches leakage_branches(const SystemSpec& spec, const FrozenPulse& pulse,
                                 double alpha, const IntegratorConfig& cfg = {});

/// One result per alpha; parameter "epsilon_f[alpha=<alpha>]".
std::vector<SweepResult> leakage_infidelity(const SystemSpec& spec,
                                            const std::vector<FrozenPulse>& pulses,
                                            const std::vector<double>& epsilons,
                                            const std::vector<double>& alphas,
                                            const SweepOptions& opts = {});

struct StrayPhotonOptions {
  /// Photon distribution over modes; uniform when unset.
  std::optional<std::vector<double>> weights;
  /// Three-level qubits with this anharmonicity; two-level when unset.
  std::optional<double> anharmonicity;
};

/// Final P_B(e) of the clean branch and of each one-photon branch.
struct StrayPhotonBranches {
  double ideal = 0.0;
  std::vector<double> per_mode;
};

StrayPhotonBranches stray_photon_branches(const SystemSpec& spec, const FrozenPulse& pulse,
                                          const StrayPhotonOptions& stray = {},
                                          const SweepOptions& opts = {});

/// 1 - [(1 - eps) P_ideal + eps sum_k w_k P_k].
double stray_photon_mix(const StrayPhotonBranches& b, const std::vector<double>& weights,
                        double epsilon);

SweepResult stray_photon_infidelity(const SystemSpec& spec,
                                    const std::vector<FrozenPulse>& pulses,
                                    const std::vector<double>& epsilons,
                                    const StrayPhotonOptions& stray = {},
                                    const SweepOptions& opts = {});

}  // namespace qst

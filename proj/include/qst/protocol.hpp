#pragma once

// The two experiments: single-qubit round trip (g_B = 0) and A -> B transfer.

#include <variant>
#include <vector>

#include "qst/dynamics.hpp"

namespace qst {

enum class OpenSolver { NonHermitian, Lindblad };

struct RoundTripResult {
  SimResult sim;
  double return_probability = 0.0;
};

/// Either a shaped pulse or a constant coupling strength.
using CouplingShape = std::variant<PulseParams, double>;

/// Qubit A alone on the channel, initially excited. t_final defaults to the
/// pulse's t_cycle for a pulse and is required for constant coupling.
RoundTripResult run_round_trip(const SystemSpec& spec,
                               const CouplingShape& coupling,
                               std::optional<double> t_final = std::nullopt,
                               const IntegratorConfig& cfg = {});

struct TransferResult {
  SimResult sim;
  double fidelity = 0.0;
  double t_end = 0.0;
  std::vector<double> residual_a;  // 1 - P_A(t)
  std::vector<double> residual_b;  // 1 - P_B(t)
};

/// Basis, Hamiltonian and dissipators of a transfer setup, built once and
/// reused across schedules. Lossless specs use the single-excitation basis;
/// lossy ones add the vacuum.
class TransferModel {
 public:
  explicit TransferModel(SystemSpec spec,
                         OpenSolver solver = OpenSolver::NonHermitian);

  const SystemSpec& spec() const { return spec_; }
  const Basis& basis() const { return basis_; }
  const HamiltonianMatrix& hamiltonian() const { return hamiltonian_; }
  const DissipatorSet& dissipators() const { return dissipators_; }
  bool lossy() const { return !dissipators_.empty(); }

  /// Excitation starts on `source`; fidelity is the other qubit's |e>
  /// population at the end of the schedule.
  TransferResult run(const TransferSchedule& schedule,
                     const IntegratorConfig& cfg = {},
                     Qubit source = Qubit::A) const;

  /// Mixed initial condition; always uses the Lindblad solver.
  TransferResult run(const TransferSchedule& schedule,
                     const Eigen::MatrixXcd& rho0,
                     const IntegratorConfig& cfg = {}) const;

  /// Final P_B only (two output samples).
  double fidelity(const TransferSchedule& schedule,
                  const IntegratorConfig& cfg = {}) const;

 private:
  SystemSpec spec_;
  OpenSolver solver_;
  Basis basis_;
  HamiltonianMatrix hamiltonian_;
  DissipatorSet dissipators_;
};

TransferResult run_transfer(const SystemSpec& spec,
                            const TransferSchedule& schedule,
                            const IntegratorConfig& cfg = {},
                            OpenSolver solver = OpenSolver::NonHermitian);

/// Schedule built with g0 = qubit_a.g_max.
TransferSchedule schedule_for(const SystemSpec& spec, double kappa, double tau_d,
                              Scheme scheme);

double transfer_fidelity(const SystemSpec& spec, double kappa, double tau_d,
                         Scheme scheme = Scheme::SimultaneousIdentical,
                         const IntegratorConfig& cfg = {});

/// Local maxima of `values` whose prominence (height above the higher of the
/// two surrounding minima) exceeds `min_prominence`. Returns sample indices.
std::vector<std::size_t> find_peaks(const std::vector<double>& values,
                                    double min_prominence = 0.05);

/// One revival per channel round trip: the highest prominent P_A peak inside
/// each window [n, n + 1) / nu_fsr, n >= 1. Windows without a peak are skipped.
std::vector<std::size_t> revival_peaks(const SimResult& sim, double nu_fsr = 1.0,
                                       double min_prominence = 0.05);

}  // namespace qst

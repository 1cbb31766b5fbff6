#pragma once

// Time propagation of state vectors and density matrices under
// H(t) = H_diag + g_A(t) V_A + g_B(t) V_B, with optional Lindblad damping.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qst/integrator.hpp"
#include "qst/model.hpp"
#include "qst/statespace.hpp"

namespace qst {

/// Coupling envelopes g_A(t), g_B(t) plus the times where they change segment.
class Drive {
 public:
  using Fn = std::function<Couplings(double)>;

  Drive(Fn fn, std::vector<double> knots);

  static Drive transfer(const TransferSchedule& schedule);
  static Drive constant(double g_a, double g_b);
  /// Pulse on one qubit, the other uncoupled.
  static Drive single(const PulseParams& pulse, Qubit q);

  Couplings operator()(double t) const { return fn_(t); }
  /// {0, interior knots..., t_final}.
  std::vector<double> knots(double t_final) const;

 private:
  Fn fn_;
  std::vector<double> knots_;
};

struct Populations {
  double p_a = 0.0;  // qubit A in |e>
  double p_b = 0.0;  // qubit B in |e>
  Eigen::VectorXd modes;  // mean photon number per mode
  double p_f_a = 0.0;
  double p_vac = 0.0;
};

Populations populations(const Eigen::VectorXcd& psi, const Basis& basis);
Populations populations(const Eigen::MatrixXcd& rho, const Basis& basis);

struct SimResult {
  std::vector<double> times;
  std::vector<double> p_a;
  std::vector<double> p_b;
  std::vector<double> p_f_a;
  std::vector<double> p_vac;
  Eigen::MatrixXd mode_pops;  // samples x modes
  std::optional<Eigen::VectorXcd> final_state;
  std::optional<Eigen::MatrixXcd> final_rho;
  /// | ||psi(t_final)|| - 1 | for state vectors, | tr rho - 1 | for rho.
  double norm_drift = 0.0;
  double edge_pop_max = 0.0;
  /// Smallest eigenvalue of the final density matrix (Lindblad runs only).
  std::optional<double> min_eigenvalue;
  bool has_f_level = false;
  bool has_vacuum = false;
  IntegratorStats stats;

  double final_p_a() const { return p_a.back(); }
  double final_p_b() const { return p_b.back(); }
};

/// Unit vector on `s`.
Eigen::VectorXcd basis_vector(const Basis& basis, const BasisState& s);

/// Closed evolution i dpsi/dt = H(t) psi.
SimResult propagate_pure(const Basis& basis, const HamiltonianMatrix& h,
                         const Drive& drive, const Eigen::VectorXcd& psi0,
                         double t_final, const IntegratorConfig& cfg = {});

/// No-jump evolution under H - (i/2) sum rate L^dagger L. Exact for the
/// populations outside the vacuum whenever every jump lands in Vacuum.
/// Throws std::invalid_argument if a jump has any other target.
SimResult propagate_nonhermitian(const Basis& basis, const HamiltonianMatrix& h,
                                 const DissipatorSet& dissipators,
                                 const Drive& drive,
                                 const Eigen::VectorXcd& psi0, double t_final,
                                 const IntegratorConfig& cfg = {});

/// Lindblad master equation with the same dissipators.
SimResult propagate_lindblad(const Basis& basis, const HamiltonianMatrix& h,
                             const DissipatorSet& dissipators,
                             const Drive& drive, const Eigen::MatrixXcd& rho0,
                             double t_final, const IntegratorConfig& cfg = {});

/// Max population of the two outermost modes over all sampled times.
double edge_mode_diagnostic(const SimResult& result);

}  // namespace qst

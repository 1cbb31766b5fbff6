#pragma once

// Excitation-number-resolved basis and operator assembly.
//
// The Hamiltonian is kept in the static rotating frame of the central mode:
// detunings sit on the diagonal and the qubit/mode exchange couplings are
// time-independent matrices scaled by the (time-dependent) envelopes,
//
//     H(t) = H_diag + g_A(t) V_A + g_B(t) V_B,
//
// all in angular units (2*pi applied here).

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qst/model.hpp"

namespace qst {

using cplx = std::complex<double>;
using SparseMatrixXcd = Eigen::SparseMatrix<cplx>;

enum class Qubit { A, B };

/// Occupation-number label of a basis state: qubit levels (0 = g, 1 = e,
/// 2 = f) and up to two photons, stored sorted (-1 marks an empty slot).
struct BasisState {
  int level_a = 0;
  int level_b = 0;
  std::array<int, 2> photons{-1, -1};

  static BasisState vacuum() { return {}; }
  static BasisState exc_a(int level = 1) { return {level, 0, {-1, -1}}; }
  static BasisState exc_b(int level = 1) { return {0, level, {-1, -1}}; }
  static BasisState photon(int k) { return {0, 0, {k, -1}}; }
  static BasisState exc_a_photon(int k) { return {1, 0, {k, -1}}; }
  static BasisState exc_b_photon(int k) { return {0, 1, {k, -1}}; }
  static BasisState exc_a_exc_b() { return {1, 1, {-1, -1}}; }
  static BasisState two_photons(int k, int l);

  int photon_count() const;
  /// Number of photons in mode k (0, 1 or 2).
  int occupation(int k) const;
  /// e counts 1, f counts 2, each photon counts 1.
  int excitation() const { return level_a + level_b + photon_count(); }
  int level(Qubit q) const { return q == Qubit::A ? level_a : level_b; }

  friend bool operator==(const BasisState&, const BasisState&) = default;
};

std::string describe(const BasisState& s);

class Basis {
 public:
  Basis(int n_modes, std::vector<BasisState> states);

  int dimension() const { return static_cast<int>(states_.size()); }
  int n_modes() const { return n_modes_; }
  const std::vector<BasisState>& states() const { return states_; }
  const BasisState& operator[](int i) const { return states_[i]; }
  std::optional<int> find(const BasisState& s) const;
  /// Index of `s`; throws std::out_of_range when absent.
  int index(const BasisState& s) const;
  bool contains_vacuum() const { return find(BasisState::vacuum()).has_value(); }
  const std::set<int>& manifolds() const { return manifolds_; }

 private:
  std::uint64_t key(const BasisState& s) const;

  int n_modes_;
  std::vector<BasisState> states_;
  std::unordered_map<std::uint64_t, int> index_;
  std::set<int> manifolds_;
};

/// Deterministic ordering: Vacuum; ExcA, ExcB, Photon(0..N-1); then
/// ExcA(f), ExcB(f), ExcA_e ExcB_e, ExcA_e Photon(k), ExcB_e Photon(k),
/// TwoPhotons(k <= l) in lexicographic order. f-states are omitted for
/// two-level qubits.
Basis build_basis(const SystemSpec& spec, const std::set<int>& manifolds);

struct HamiltonianMatrix {
  Eigen::VectorXd diagonal;  // angular
  SparseMatrixXcd coupling_a;  // 2*pi * V_A
  SparseMatrixXcd coupling_b;  // 2*pi * V_B

  int dimension() const { return static_cast<int>(diagonal.size()); }
  Eigen::MatrixXcd dense(double g_a, double g_b) const;
  Eigen::MatrixXcd dense(const Couplings& g) const { return dense(g.a, g.b); }
};

/// Unscaled on-site energies (ordinary frequency) of every basis state in the
/// rotating frame: sum of mode detunings, qubit detunings, and 2*delta - alpha
/// for an f level.
Eigen::VectorXd state_energies(const SystemSpec& spec, const Basis& basis);

/// Qubit-B coupling sign (-1)^(k - parity_origin).
double parity_sign(int k, int parity_origin);

HamiltonianMatrix build_hamiltonian(const SystemSpec& spec, const Basis& basis);

struct Dissipator {
  SparseMatrixXcd jump;
  double rate = 0.0;  // angular
  std::string label;
};

using DissipatorSet = std::vector<Dissipator>;

/// One jump per qubit (rate 2*pi*gamma) and one per mode (rate 2*pi*kappa_c);
/// channels with zero rate are skipped. Requires Vacuum in the basis.
DissipatorSet build_dissipators(const SystemSpec& spec, const Basis& basis);

/// Lowering operator of qubit q (sigma_q) on `basis`, truncated to it.
SparseMatrixXcd qubit_lowering(const Basis& basis, Qubit q);
/// Photon annihilation operator c_k on `basis`, truncated to it.
SparseMatrixXcd mode_lowering(const Basis& basis, int k);

/// N independent N(0, (delta*nu_fsr/3)^2) draws, reproducible per seed.
std::vector<double> sample_disorder(double delta, int n_modes,
                                    std::uint64_t seed);

}  // namespace qst

#include "qst/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qst {

BasisState BasisState::two_photons(int k, int l) {
  return {0, 0, {std::min(k, l), std::max(k, l)}};
}

int BasisState::photon_count() const {
  return (photons[0] >= 0 ? 1 : 0) + (photons[1] >= 0 ? 1 : 0);
}

int BasisState::occupation(int k) const {
  return (photons[0] == k ? 1 : 0) + (photons[1] == k ? 1 : 0);
}

std::string describe(const BasisState& s) {
  static constexpr char level_name[] = {'g', 'e', 'f'};
  std::string out = "|";
  out += level_name[s.level_a];
  out += level_name[s.level_b];
  for (int p : s.photons) {
    if (p >= 0) out += ",1_" + std::to_string(p);
  }
  return out + ">";
}

Basis::Basis(int n_modes, std::vector<BasisState> states)
    : n_modes_(n_modes), states_(std::move(states)) {
  for (int i = 0; i < dimension(); ++i) {
    const auto [it, inserted] = index_.emplace(key(states_[i]), i);
    if (!inserted) {
      throw std::invalid_argument("duplicate basis state " +
                                  describe(states_[i]));
    }
    manifolds_.insert(states_[i].excitation());
  }
}

std::uint64_t Basis::key(const BasisState& s) const {
  const auto m = static_cast<std::uint64_t>(n_modes_) + 1;
  std::uint64_t k = static_cast<std::uint64_t>(s.level_a * 3 + s.level_b);
  k = k * m + static_cast<std::uint64_t>(s.photons[0] + 1);
  k = k * m + static_cast<std::uint64_t>(s.photons[1] + 1);
  return k;
}

std::optional<int> Basis::find(const BasisState& s) const {
  if (auto it = index_.find(key(s)); it != index_.end()) return it->second;
  return std::nullopt;
}

int Basis::index(const BasisState& s) const {
  if (auto i = find(s)) return *i;
  throw std::out_of_range("state " + describe(s) + " not in basis");
}

Basis build_basis(const SystemSpec& spec, const std::set<int>& manifolds) {
  const int n = spec.channel.n_modes;
  if (n < 1) throw std::invalid_argument("n_modes must be positive");
  for (int m : manifolds) {
    if (m < 0 || m > 2) {
      throw std::invalid_argument("excitation manifolds are limited to {0,1,2}");
    }
  }
  std::vector<BasisState> states;
  if (manifolds.contains(0)) states.push_back(BasisState::vacuum());
  if (manifolds.contains(1)) {
    states.push_back(BasisState::exc_a());
    states.push_back(BasisState::exc_b());
    for (int k = 0; k < n; ++k) states.push_back(BasisState::photon(k));
  }
  if (manifolds.contains(2)) {
    if (spec.qubit_a.levels == 3) states.push_back(BasisState::exc_a(2));
    if (spec.qubit_b.levels == 3) states.push_back(BasisState::exc_b(2));
    states.push_back(BasisState::exc_a_exc_b());
    for (int k = 0; k < n; ++k) states.push_back(BasisState::exc_a_photon(k));
    for (int k = 0; k < n; ++k) states.push_back(BasisState::exc_b_photon(k));
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) states.push_back(BasisState::two_photons(k, l));
    }
  }
  return Basis(n, std::move(states));
}

namespace {

struct Amplitude {
  double value;
  BasisState state;
};

int levels_of(const SystemSpec& spec, Qubit q) {
  return q == Qubit::A ? spec.qubit_a.levels : spec.qubit_b.levels;
}

void set_level(BasisState& s, Qubit q, int level) {
  (q == Qubit::A ? s.level_a : s.level_b) = level;
}

// Transmon-like ladder: <l-1|sigma|l> = sqrt(l).
std::optional<Amplitude> lower_qubit(const BasisState& s, Qubit q) {
  const int l = s.level(q);
  if (l == 0) return std::nullopt;
  BasisState out = s;
  set_level(out, q, l - 1);
  return Amplitude{std::sqrt(static_cast<double>(l)), out};
}

std::optional<Amplitude> raise_qubit(const BasisState& s, Qubit q, int levels) {
  const int l = s.level(q);
  if (l + 1 >= levels) return std::nullopt;
  BasisState out = s;
  set_level(out, q, l + 1);
  return Amplitude{std::sqrt(static_cast<double>(l + 1)), out};
}

std::optional<Amplitude> annihilate(const BasisState& s, int k) {
  const int n = s.occupation(k);
  if (n == 0) return std::nullopt;
  BasisState out = s;
  if (out.photons[0] == k) {
    out.photons[0] = out.photons[1];
  }
  out.photons[1] = -1;
  return Amplitude{std::sqrt(static_cast<double>(n)), out};
}

SparseMatrixXcd from_triplets(int dim,
                              const std::vector<Eigen::Triplet<cplx>>& t) {
  SparseMatrixXcd m(dim, dim);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// 2*pi * sign_k * (sigma_q^dagger c_k + h.c.) summed over modes.
SparseMatrixXcd exchange_coupling(const SystemSpec& spec, const Basis& basis,
                                  Qubit q) {
  const int origin = spec.resolved_parity_origin();
  const int levels = levels_of(spec, q);
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (int col = 0; col < basis.dimension(); ++col) {
    for (int k = 0; k < basis.n_modes(); ++k) {
      auto lowered = annihilate(basis[col], k);
      if (!lowered) continue;
      auto raised = raise_qubit(lowered->state, q, levels);
      if (!raised) continue;
      auto row = basis.find(raised->state);
      if (!row) continue;
      const double sign = q == Qubit::B ? parity_sign(k, origin) : 1.0;
      const double v = two_pi * sign * lowered->value * raised->value;
      triplets.emplace_back(*row, col, v);
      triplets.emplace_back(col, *row, v);
    }
  }
  return from_triplets(basis.dimension(), triplets);
}

}  // namespace

double parity_sign(int k, int parity_origin) {
  return ((k - parity_origin) % 2 == 0) ? 1.0 : -1.0;
}

Eigen::VectorXd state_energies(const SystemSpec& spec, const Basis& basis) {
  const auto delta = mode_detunings(spec.channel);
  if (static_cast<int>(delta.size()) != basis.n_modes()) {
    throw std::invalid_argument("basis and spec disagree on n_modes");
  }
  auto qubit_energy = [](const QubitSpec& q, int level) {
    if (level == 0) return 0.0;
    if (level == 1) return q.detuning;
    return 2.0 * q.detuning - q.anharmonicity.value_or(0.0);
  };
  Eigen::VectorXd e(basis.dimension());
  for (int i = 0; i < basis.dimension(); ++i) {
    const auto& s = basis[i];
    double v = qubit_energy(spec.qubit_a, s.level_a) +
               qubit_energy(spec.qubit_b, s.level_b);
    for (int p : s.photons) {
      if (p >= 0) v += delta[p];
    }
    e[i] = v;
  }
  return e;
}

HamiltonianMatrix build_hamiltonian(const SystemSpec& spec, const Basis& basis) {
  HamiltonianMatrix h;
  h.diagonal = two_pi * state_energies(spec, basis);
  h.coupling_a = exchange_coupling(spec, basis, Qubit::A);
  h.coupling_b = exchange_coupling(spec, basis, Qubit::B);
  return h;
}

Eigen::MatrixXcd HamiltonianMatrix::dense(double g_a, double g_b) const {
  Eigen::MatrixXcd m = g_a * Eigen::MatrixXcd(coupling_a) +
                       g_b * Eigen::MatrixXcd(coupling_b);
  m.diagonal() += diagonal.cast<cplx>();
  return m;
}

SparseMatrixXcd qubit_lowering(const Basis& basis, Qubit q) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (int col = 0; col < basis.dimension(); ++col) {
    if (auto a = lower_qubit(basis[col], q)) {
      if (auto row = basis.find(a->state)) triplets.emplace_back(*row, col, a->value);
    }
  }
  return from_triplets(basis.dimension(), triplets);
}

SparseMatrixXcd mode_lowering(const Basis& basis, int k) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (int col = 0; col < basis.dimension(); ++col) {
    if (auto a = annihilate(basis[col], k)) {
      if (auto row = basis.find(a->state)) triplets.emplace_back(*row, col, a->value);
    }
  }
  return from_triplets(basis.dimension(), triplets);
}

DissipatorSet build_dissipators(const SystemSpec& spec, const Basis& basis) {
  DissipatorSet out;
  const bool lossy = spec.qubit_a.gamma > 0.0 || spec.qubit_b.gamma > 0.0 ||
                     spec.channel.kappa_c > 0.0;
  if (!lossy) return out;
  if (!basis.contains_vacuum()) {
    throw std::invalid_argument(
        "dissipators need the vacuum manifold in the basis");
  }
  if (spec.qubit_a.gamma > 0.0) {
    out.push_back({qubit_lowering(basis, Qubit::A), two_pi * spec.qubit_a.gamma,
                   "sigma_A"});
  }
  if (spec.qubit_b.gamma > 0.0) {
    out.push_back({qubit_lowering(basis, Qubit::B), two_pi * spec.qubit_b.gamma,
                   "sigma_B"});
  }
  if (spec.channel.kappa_c > 0.0) {
    for (int k = 0; k < basis.n_modes(); ++k) {
      out.push_back({mode_lowering(basis, k), two_pi * spec.channel.kappa_c,
                     "c_" + std::to_string(k)});
    }
  }
  return out;
}

std::vector<double> sample_disorder(double delta, int n_modes,
                                    std::uint64_t seed) {
  std::vector<double> xi(static_cast<std::size_t>(n_modes), 0.0);
  if (delta <= 0.0) return xi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, delta / 3.0);
  for (auto& x : xi) x = normal(rng);
  return xi;
}

}  // namespace qst

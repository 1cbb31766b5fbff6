#include "qst/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qst {

Drive::Drive(Fn fn, std::vector<double> knots)
    : fn_(std::move(fn)), knots_(std::move(knots)) {
  std::sort(knots_.begin(), knots_.end());
}

Drive Drive::transfer(const TransferSchedule& schedule) {
  return Drive([schedule](double t) { return schedule_couplings(schedule, t); },
               schedule_knots(schedule));
}

Drive Drive::constant(double g_a, double g_b) {
  return Drive([g_a, g_b](double) { return Couplings{g_a, g_b}; }, {});
}

Drive Drive::single(const PulseParams& pulse, Qubit q) {
  return Drive(
      [pulse, q](double t) {
        const double g = pulse_envelope(pulse, t);
        return q == Qubit::A ? Couplings{g, 0.0} : Couplings{0.0, g};
      },
      pulse_knots(pulse));
}

std::vector<double> Drive::knots(double t_final) const {
  std::vector<double> out{0.0};
  for (double k : knots_) {
    if (k > 0.0 && k < t_final) out.push_back(k);
  }
  out.push_back(t_final);
  return out;
}

namespace {

struct StateWeights {
  std::vector<int> a_excited, b_excited, a_f, vacuum;
  // (state index, mode, photon count)
  std::vector<std::array<int, 3>> photons;
};

StateWeights weights_for(const Basis& basis) {
  StateWeights w;
  for (int i = 0; i < basis.dimension(); ++i) {
    const auto& s = basis[i];
    if (s.level_a == 1) w.a_excited.push_back(i);
    if (s.level_b == 1) w.b_excited.push_back(i);
    if (s.level_a == 2) w.a_f.push_back(i);
    if (s == BasisState::vacuum()) w.vacuum.push_back(i);
    for (int slot = 0; slot < 2; ++slot) {
      const int k = s.photons[slot];
      if (k >= 0) w.photons.push_back({i, k, 1});
    }
  }
  return w;
}

Populations from_probabilities(const Eigen::VectorXd& prob, const Basis& basis,
                               const StateWeights& w) {
  Populations p;
  p.modes = Eigen::VectorXd::Zero(basis.n_modes());
  for (int i : w.a_excited) p.p_a += prob[i];
  for (int i : w.b_excited) p.p_b += prob[i];
  for (int i : w.a_f) p.p_f_a += prob[i];
  for (int i : w.vacuum) p.p_vac += prob[i];
  for (const auto& [i, k, n] : w.photons) p.modes[k] += n * prob[i];
  return p;
}

class Recorder {
 public:
  Recorder(const Basis& basis, std::size_t samples)
      : basis_(basis), weights_(weights_for(basis)) {
    result_.times.resize(samples);
    result_.p_a.resize(samples);
    result_.p_b.resize(samples);
    result_.p_f_a.resize(samples);
    result_.p_vac.resize(samples);
    result_.mode_pops.resize(static_cast<Eigen::Index>(samples), basis.n_modes());
    result_.has_f_level = !weights_.a_f.empty();
    result_.has_vacuum = !weights_.vacuum.empty();
  }

  void record(std::size_t i, double t, const Eigen::VectorXd& prob) {
    const auto p = from_probabilities(prob, basis_, weights_);
    result_.times[i] = t;
    result_.p_a[i] = p.p_a;
    result_.p_b[i] = p.p_b;
    result_.p_f_a[i] = p.p_f_a;
    result_.p_vac[i] = p.p_vac;
    result_.mode_pops.row(static_cast<Eigen::Index>(i)) = p.modes.transpose();
  }

  SimResult finish() {
    result_.edge_pop_max = edge_mode_diagnostic(result_);
    return std::move(result_);
  }

 private:
  const Basis& basis_;
  StateWeights weights_;
  SimResult result_;
};

void check_dimensions(const Basis& basis, const HamiltonianMatrix& h,
                      Eigen::Index n) {
  if (h.dimension() != basis.dimension() || n != basis.dimension()) {
    throw std::invalid_argument("state, basis and Hamiltonian dimensions differ");
  }
}

// y_out += g * V y for a column-major sparse V.
void accumulate(const SparseMatrixXcd& v, cplx g, const Eigen::VectorXcd& y,
                Eigen::VectorXcd& out) {
  const cplx* values = v.valuePtr();
  const int* rows = v.innerIndexPtr();
  const int* outer = v.outerIndexPtr();
  for (Eigen::Index col = 0; col < v.outerSize(); ++col) {
    const cplx yc = g * y[col];
    for (int p = outer[col]; p < outer[col + 1]; ++p) out[rows[p]] += values[p] * yc;
  }
}

SparseMatrixXcd decay_operator(const Basis& basis,
                               const DissipatorSet& dissipators) {
  SparseMatrixXcd decay(basis.dimension(), basis.dimension());
  for (const auto& d : dissipators) {
    decay += d.rate * SparseMatrixXcd(d.jump.adjoint() * d.jump);
  }
  decay.makeCompressed();
  return decay;
}

// Schrodinger right-hand side dy = -i H_eff(t) y, H_eff = H - (i/2) decay.
struct PureRhs {
  const HamiltonianMatrix& h;
  const SparseMatrixXcd* decay;
  const Drive& drive;

  void operator()(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    const Couplings g = drive(t);
    dy = h.diagonal.cast<cplx>().cwiseProduct(y);
    if (g.a != 0.0) accumulate(h.coupling_a, g.a, y, dy);
    if (g.b != 0.0) accumulate(h.coupling_b, g.b, y, dy);
    if (decay != nullptr) accumulate(*decay, cplx(0.0, -0.5), y, dy);
    dy *= cplx(0.0, -1.0);
  }
};

SimResult propagate_vector(const Basis& basis, const HamiltonianMatrix& h,
                           const SparseMatrixXcd* decay, const Drive& drive,
                           const Eigen::VectorXcd& psi0, double t_final,
                           const IntegratorConfig& cfg) {
  check_dimensions(basis, h, psi0.size());
  const auto samples = uniform_samples(0.0, t_final, cfg.samples);
  const auto knots = drive.knots(t_final);
  Recorder recorder(basis, samples.size());
  Eigen::VectorXcd y = psi0;
  PureRhs rhs{h, decay, drive};
  const auto stats = integrate<Eigen::VectorXcd>(
      rhs, y, knots, samples,
      [&](std::size_t i, double t, const Eigen::VectorXcd& v) {
        recorder.record(i, t, v.cwiseAbs2());
      },
      cfg);
  SimResult result = recorder.finish();
  result.norm_drift = std::abs(y.norm() - 1.0);
  result.final_state = std::move(y);
  result.stats = stats;
  return result;
}

}  // namespace

Populations populations(const Eigen::VectorXcd& psi, const Basis& basis) {
  if (psi.size() != basis.dimension()) {
    throw std::invalid_argument("state and basis dimensions differ");
  }
  return from_probabilities(psi.cwiseAbs2(), basis, weights_for(basis));
}

Populations populations(const Eigen::MatrixXcd& rho, const Basis& basis) {
  if (rho.rows() != basis.dimension() || rho.cols() != basis.dimension()) {
    throw std::invalid_argument("density matrix and basis dimensions differ");
  }
  return from_probabilities(rho.diagonal().real(), basis, weights_for(basis));
}

Eigen::VectorXcd basis_vector(const Basis& basis, const BasisState& s) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.dimension());
  v[basis.index(s)] = 1.0;
  return v;
}

SimResult propagate_pure(const Basis& basis, const HamiltonianMatrix& h,
                         const Drive& drive, const Eigen::VectorXcd& psi0,
                         double t_final, const IntegratorConfig& cfg) {
  return propagate_vector(basis, h, nullptr, drive, psi0, t_final, cfg);
}

SimResult propagate_nonhermitian(const Basis& basis, const HamiltonianMatrix& h,
                                 const DissipatorSet& dissipators,
                                 const Drive& drive,
                                 const Eigen::VectorXcd& psi0, double t_final,
                                 const IntegratorConfig& cfg) {
  const auto vac = basis.find(BasisState::vacuum());
  for (const auto& d : dissipators) {
    for (Eigen::Index col = 0; col < d.jump.outerSize(); ++col) {
      for (SparseMatrixXcd::InnerIterator it(d.jump, col); it; ++it) {
        if (it.value() != cplx(0.0) && (!vac || it.row() != *vac)) {
          throw std::invalid_argument("jump " + d.label +
                                      " has a target other than the vacuum");
        }
      }
    }
  }
  if (dissipators.empty()) {
    return propagate_vector(basis, h, nullptr, drive, psi0, t_final, cfg);
  }
  const SparseMatrixXcd decay = decay_operator(basis, dissipators);
  return propagate_vector(basis, h, &decay, drive, psi0, t_final, cfg);
}

SimResult propagate_lindblad(const Basis& basis, const HamiltonianMatrix& h,
                             const DissipatorSet& dissipators,
                             const Drive& drive, const Eigen::MatrixXcd& rho0,
                             double t_final, const IntegratorConfig& cfg) {
  const Eigen::Index d = basis.dimension();
  check_dimensions(basis, h, rho0.rows());
  if (rho0.cols() != d) throw std::invalid_argument("density matrix must be square");
  if (!dissipators.empty() && !basis.contains_vacuum()) {
    throw std::invalid_argument("Lindblad propagation needs Vacuum in the basis");
  }

  const SparseMatrixXcd decay = decay_operator(basis, dissipators);
  const bool damped = decay.nonZeros() > 0;
  std::vector<SparseMatrixXcd> scaled_jumps;
  std::vector<SparseMatrixXcd> scaled_jumps_adj;
  for (const auto& dis : dissipators) {
    scaled_jumps.push_back(std::sqrt(dis.rate) * dis.jump);
    scaled_jumps_adj.push_back(SparseMatrixXcd(scaled_jumps.back().adjoint()));
  }

  Eigen::MatrixXcd m(d, d);
  // drho = -i (H_eff rho - rho H_eff^dagger) + sum L rho L^dagger, using
  // rho H_eff^dagger = (H_eff rho)^dagger for Hermitian rho.
  auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    const Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), d, d);
    dy.resize(d * d);
    Eigen::Map<Eigen::MatrixXcd> out(dy.data(), d, d);
    const Couplings g = drive(t);
    m = h.diagonal.cast<cplx>().asDiagonal() * rho;
    if (g.a != 0.0) m.noalias() += (g.a * h.coupling_a) * rho;
    if (g.b != 0.0) m.noalias() += (g.b * h.coupling_b) * rho;
    if (damped) m.noalias() += (cplx(0.0, -0.5) * decay) * rho;
    out = cplx(0.0, -1.0) * m;
    out += cplx(0.0, 1.0) * m.adjoint();
    for (std::size_t j = 0; j < scaled_jumps.size(); ++j) {
      out.noalias() += scaled_jumps[j] * (rho * scaled_jumps_adj[j]);
    }
  };

  const auto samples = uniform_samples(0.0, t_final, cfg.samples);
  const auto knots = drive.knots(t_final);
  Recorder recorder(basis, samples.size());
  Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), d * d);
  const auto stats = integrate<Eigen::VectorXcd>(
      rhs, y, knots, samples,
      [&](std::size_t i, double t, const Eigen::VectorXcd& v) {
        const Eigen::Map<const Eigen::MatrixXcd> rho(v.data(), d, d);
        recorder.record(i, t, rho.diagonal().real());
      },
      cfg);

  Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(y.data(), d, d);
  rho = (0.5 * (rho + rho.adjoint())).eval();
  SimResult result = recorder.finish();
  result.norm_drift = std::abs(rho.trace().real() - 1.0);
  result.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(rho, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  result.final_rho = std::move(rho);
  result.stats = stats;
  return result;
}

double edge_mode_diagnostic(const SimResult& result) {
  const auto& m = result.mode_pops;
  if (m.cols() == 0 || m.rows() == 0) return 0.0;
  return std::max(m.col(0).maxCoeff(), m.col(m.cols() - 1).maxCoeff());
}

}  // namespace qst

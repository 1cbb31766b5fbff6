#include "qst/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qst {

namespace {

bool has_loss(const SystemSpec& spec) {
  return spec.qubit_a.gamma > 0.0 || spec.qubit_b.gamma > 0.0 ||
         spec.channel.kappa_c > 0.0;
}

std::set<int> manifolds_for(const SystemSpec& spec) {
  return has_loss(spec) ? std::set<int>{0, 1} : std::set<int>{1};
}

std::vector<double> one_minus(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return 1.0 - x; });
  return out;
}

}  // namespace

RoundTripResult run_round_trip(const SystemSpec& spec,
                               const CouplingShape& coupling,
                               std::optional<double> t_final,
                               const IntegratorConfig& cfg) {
  SystemSpec s = spec;
  s.qubit_b.g_max = 0.0;
  const Basis basis = build_basis(s, manifolds_for(s));
  const HamiltonianMatrix h = build_hamiltonian(s, basis);
  const DissipatorSet dis = build_dissipators(s, basis);

  const auto* pulse = std::get_if<PulseParams>(&coupling);
  const Drive drive = pulse ? Drive::single(*pulse, Qubit::A)
                            : Drive::constant(std::get<double>(coupling), 0.0);
  double t_end = 0.0;
  if (t_final) {
    t_end = *t_final;
  } else if (pulse) {
    t_end = pulse->t_cycle();
  } else {
    throw std::invalid_argument("constant-coupling round trip needs t_final");
  }
  const Eigen::VectorXcd psi0 = basis_vector(basis, BasisState::exc_a());
  RoundTripResult out;
  out.sim = propagate_nonhermitian(basis, h, dis, drive, psi0, t_end, cfg);
  out.return_probability = out.sim.final_p_a();
  return out;
}

TransferModel::TransferModel(SystemSpec spec, OpenSolver solver)
    : spec_(std::move(spec)),
      solver_(solver),
      basis_(build_basis(spec_, manifolds_for(spec_))),
      hamiltonian_(build_hamiltonian(spec_, basis_)),
      dissipators_(build_dissipators(spec_, basis_)) {}

TransferResult TransferModel::run(const TransferSchedule& schedule,
                                  const IntegratorConfig& cfg,
                                  Qubit source) const {
  const double t_end = schedule.duration();
  const Drive drive = Drive::transfer(schedule);
  const BasisState start =
      source == Qubit::A ? BasisState::exc_a() : BasisState::exc_b();
  TransferResult out;
  if (lossy() && solver_ == OpenSolver::Lindblad) {
    const Eigen::VectorXcd psi0 = basis_vector(basis_, start);
    return run(schedule, Eigen::MatrixXcd(psi0 * psi0.adjoint()), cfg);
  }
  out.sim = propagate_nonhermitian(basis_, hamiltonian_, dissipators_, drive,
                                   basis_vector(basis_, start), t_end, cfg);
  out.t_end = t_end;
  out.fidelity = source == Qubit::A ? out.sim.final_p_b() : out.sim.final_p_a();
  out.residual_a = one_minus(out.sim.p_a);
  out.residual_b = one_minus(out.sim.p_b);
  return out;
}

TransferResult TransferModel::run(const TransferSchedule& schedule,
                                  const Eigen::MatrixXcd& rho0,
                                  const IntegratorConfig& cfg) const {
  const double t_end = schedule.duration();
  TransferResult out;
  out.sim = propagate_lindblad(basis_, hamiltonian_, dissipators_,
                               Drive::transfer(schedule), rho0, t_end, cfg);
  out.t_end = t_end;
  out.fidelity = out.sim.final_p_b();
  out.residual_a = one_minus(out.sim.p_a);
  out.residual_b = one_minus(out.sim.p_b);
  return out;
}

double TransferModel::fidelity(const TransferSchedule& schedule,
                               const IntegratorConfig& cfg) const {
  IntegratorConfig c = cfg;
  c.samples = 2;
  return run(schedule, c).fidelity;
}

TransferResult run_transfer(const SystemSpec& spec,
                            const TransferSchedule& schedule,
                            const IntegratorConfig& cfg, OpenSolver solver) {
  return TransferModel(spec, solver).run(schedule, cfg);
}

TransferSchedule schedule_for(const SystemSpec& spec, double kappa, double tau_d,
                              Scheme scheme) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (tau_d < 0.0) throw std::invalid_argument("tau_d must be non-negative");
  return make_schedule(scheme, spec.qubit_a.g_max, kappa, tau_d);
}

double transfer_fidelity(const SystemSpec& spec, double kappa, double tau_d,
                         Scheme scheme, const IntegratorConfig& cfg) {
  return TransferModel(spec).fidelity(schedule_for(spec, kappa, tau_d, scheme),
                                      cfg);
}

std::vector<std::size_t> find_peaks(const std::vector<double>& values,
                                    double min_prominence) {
  std::vector<std::size_t> peaks;
  const std::size_t n = values.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(values[i] > values[i - 1] && values[i] >= values[i + 1])) continue;
    double left_min = values[i];
    for (std::size_t j = i; j-- > 0;) {
      if (values[j] > values[i]) break;
      left_min = std::min(left_min, values[j]);
    }
    double right_min = values[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (values[j] > values[i]) break;
      right_min = std::min(right_min, values[j]);
    }
    if (values[i] - std::max(left_min, right_min) > min_prominence) {
      peaks.push_back(i);
    }
  }
  return peaks;
}

std::vector<std::size_t> revival_peaks(const SimResult& sim, double nu_fsr,
                                       double min_prominence) {
  std::vector<std::size_t> out;
  long window = 0;
  for (std::size_t i : find_peaks(sim.p_a, min_prominence)) {
    const long n = static_cast<long>(std::floor(sim.times[i] * nu_fsr));
    if (n < 1) continue;
    if (n != window) {
      out.push_back(i);
      window = n;
    } else if (sim.p_a[i] > sim.p_a[out.back()]) {
      out.back() = i;
    }
  }
  return out;
}

}  // namespace qst

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qst/robustness.hpp"

using namespace qst;

namespace {

constexpr int kModes = 11;

FrozenPulse frozen(double g, double kappa, double tau_d) {
  const auto spec = default_spec(g, kModes);
  IntegratorConfig c;
  c.samples = 2;
  FrozenPulse p{g, kappa, tau_d, Scheme::SimultaneousIdentical, 0.0};
  p.intrinsic_infidelity = 1.0 - transfer_fidelity(spec, kappa, tau_d, p.scheme, c);
  return p;
}

const std::vector<FrozenPulse>& pulses() {
  static const std::vector<FrozenPulse> p{frozen(0.4, 4.11283, 0.19093),
                                          frozen(0.8, 14.888, 0.406)};
  return p;
}

SystemSpec base() { return default_spec(0.5, kModes); }

double point(const SweepResult& r, double g, double value) {
  for (const auto& p : r.points) {
    if (p.g_ratio == g && p.value == value) return p.infidelity;
  }
  FAIL("missing sweep point");
  return 0.0;
}

void check_layout(const SweepResult& r) {
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    const auto& a = r.points[i - 1];
    const auto& b = r.points[i];
    CHECK((a.g_ratio < b.g_ratio || (a.g_ratio == b.g_ratio && a.value < b.value)));
  }
  for (const auto& p : r.points) {
    CHECK(p.infidelity >= 0.0);
    CHECK(p.infidelity <= 1.0);
  }
  CHECK(r.pulse_checksum == pulse_checksum(pulses()));
}

}  // namespace

TEST_CASE("pulse checksum is stable and sensitive to every parameter") {
  const auto a = pulse_checksum(pulses());
  CHECK(a.size() == 16);
  CHECK(a.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(a == pulse_checksum(pulses()));
  auto changed = pulses();
  changed[1].kappa = std::nextafter(changed[1].kappa, 100.0);
  CHECK(pulse_checksum(changed) != a);
  changed = pulses();
  changed[0].scheme = Scheme::DelayedMirror;
  CHECK(pulse_checksum(changed) != a);
  // The intrinsic value is derived, not part of the pulse identity.
  changed = pulses();
  changed[0].intrinsic_infidelity = 0.5;
  CHECK(pulse_checksum(changed) == a);
}

TEST_CASE("frozen pulses copy the optimization result") {
  OptimizationResult r;
  r.g_ratio = 0.6;
  r.kappa_opt = 8.0;
  r.tau_d_opt = 0.3;
  r.f_opt = 0.9995;
  r.scheme = Scheme::DelayedMirror;
  const auto p = FrozenPulse::from(r);
  CHECK(p.g_ratio == 0.6);
  CHECK(p.kappa == 8.0);
  CHECK(p.tau_d == 0.3);
  CHECK(p.scheme == Scheme::DelayedMirror);
  CHECK(p.intrinsic_infidelity == doctest::Approx(5e-4));
}

TEST_CASE("dissipation sweeps start at the intrinsic value and grow with loss") {
  const std::vector<double> values{1e-2, 0.0, 1e-4, 1e-3};
  for (auto which : {Dissipation::QubitDecay, Dissipation::CavityLoss}) {
    SweepOptions o;
    o.lindblad_check = true;
    const auto r = sweep_dissipation(base(), pulses(), which, values, o);
    CHECK(r.parameter == (which == Dissipation::QubitDecay ? "gamma" : "kappa_c"));
    check_layout(r);
    REQUIRE(r.points.size() == 8);
    for (const auto& p : pulses()) {
      CHECK(std::abs(point(r, p.g_ratio, 0.0) - p.intrinsic_infidelity) < 1e-9);
      CHECK(point(r, p.g_ratio, 1e-4) <= point(r, p.g_ratio, 1e-3));
      CHECK(point(r, p.g_ratio, 1e-3) <= point(r, p.g_ratio, 1e-2));
    }
    // Shorter pulses keep the qubits excited for less time.
    if (which == Dissipation::QubitDecay) CHECK(point(r, 0.8, 1e-2) < point(r, 0.4, 1e-2));
    REQUIRE(r.lindblad_discrepancy.has_value());
    CHECK(*r.lindblad_discrepancy < 1e-8);
  }
}

TEST_CASE("disorder averages are reproducible across worker counts") {
  const std::vector<double> deltas{0.0, 0.05, 0.2};
  SweepOptions one;
  SweepOptions three;
  three.workers = 3;
  const auto a = disorder_average(base(), pulses(), deltas, 6, 42, one);
  const auto b = disorder_average(base(), pulses(), deltas, 6, 42, three);
  CHECK(a.parameter == "delta");
  check_layout(a);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].infidelity == b.points[i].infidelity);
    CHECK(a.points[i].stderr_ == b.points[i].stderr_);
  }
  for (const auto& p : pulses()) {
    CHECK(std::abs(point(a, p.g_ratio, 0.0) - p.intrinsic_infidelity) < 1e-9);
    CHECK(point(a, p.g_ratio, 0.2) > point(a, p.g_ratio, 0.0));
  }
  for (const auto& p : a.points) {
    if (p.value == 0.0) CHECK(p.stderr_ == 0.0);
    else CHECK(p.stderr_ > 0.0);
  }
  const auto c = disorder_average(base(), pulses(), deltas, 6, 43, one);
  CHECK(point(c, 0.8, 0.2) != point(a, 0.8, 0.2));
}

TEST_CASE("disorder mean matches an explicit average over seeded draws") {
  const auto& p = pulses()[1];
  const auto r = disorder_average(base(), {p}, {0.1}, 4, 7);
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    auto spec = with_coupling(base(), p.g_ratio);
    spec.channel.disorder_offsets = sample_disorder(0.1, kModes, 7 + k);
    IntegratorConfig c;
    c.samples = 2;
    sum += 1.0 - transfer_fidelity(spec, p.kappa, p.tau_d, p.scheme, c);
  }
  CHECK(std::abs(r.points.front().infidelity - sum / 4.0) < 1e-14);
}

TEST_CASE("detuning sweeps are centred on the intrinsic value") {
  const std::vector<double> values{-0.01, 0.0, 0.01};
  for (bool symmetric : {false, true}) {
    const auto r = sweep_detuning(base(), pulses(), values, symmetric);
    CHECK(r.parameter == "delta_omega");
    check_layout(r);
    for (const auto& p : pulses()) {
      CHECK(std::abs(point(r, p.g_ratio, 0.0) - p.intrinsic_infidelity) < 1e-9);
      const double lo = point(r, p.g_ratio, -0.01);
      const double hi = point(r, p.g_ratio, 0.01);
      CHECK(lo > point(r, p.g_ratio, 0.0) * 0.5);
      CHECK(std::abs(lo - hi) <= 0.1 * std::max(lo, hi));
    }
  }
}

TEST_CASE("leakage mixture is exactly linear with the right endpoints") {
  const std::vector<double> eps{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto rs = leakage_infidelity(base(), pulses(), eps, {1.0, 10.0});
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].parameter == "epsilon_f[alpha=1]");
  CHECK(rs[1].parameter == "epsilon_f[alpha=10]");
  for (std::size_t a = 0; a < 2; ++a) {
    const auto& r = rs[a];
    check_layout(r);
    for (const auto& p : pulses()) {
      const auto b = leakage_branches(base(), p, a == 0 ? 1.0 : 10.0);
      CHECK(std::abs(point(r, p.g_ratio, 0.0) - p.intrinsic_infidelity) < 1e-9);
      CHECK(point(r, p.g_ratio, 1.0) == b.f);
      const double lo = point(r, p.g_ratio, 0.25);
      const double mid = point(r, p.g_ratio, 0.5);
      const double hi = point(r, p.g_ratio, 0.75);
      CHECK(std::abs(mid - 0.5 * (lo + hi)) < 1e-12);
      CHECK(std::abs(mid - 0.5 * (point(r, p.g_ratio, 0.0) + point(r, p.g_ratio, 1.0))) < 1e-12);
    }
  }
}

TEST_CASE("leakage mixture matches a mixed-state propagation") {
  const auto& p = pulses()[1];
  const double alpha = 1.0;
  const double eps = 0.3;
  auto spec = with_coupling(base(), p.g_ratio);
  for (auto* q : {&spec.qubit_a, &spec.qubit_b}) {
    q->levels = 3;
    q->anharmonicity = alpha;
  }
  const auto basis = build_basis(spec, {1, 2});
  const auto h = build_hamiltonian(spec, basis);
  const auto e = basis_vector(basis, BasisState::exc_a(1));
  const auto f = basis_vector(basis, BasisState::exc_a(2));
  const Eigen::MatrixXcd rho0 = (1.0 - eps) * e * e.adjoint() + eps * f * f.adjoint();
  const auto sched = make_schedule(p.scheme, p.g_ratio, p.kappa, p.tau_d);
  IntegratorConfig c;
  c.samples = 2;
  const auto sim = propagate_lindblad(basis, h, {}, Drive::transfer(sched), rho0, sched.duration(), c);
  const auto b = leakage_branches(base(), p, alpha);
  CHECK(std::abs((1.0 - sim.final_p_b()) - ((1.0 - eps) * b.e + eps * b.f)) < 1e-8);
}

TEST_CASE("stray-photon mixture is linear and matches a mixed-state propagation") {
  const auto& p = pulses()[0];
  const auto b = stray_photon_branches(base(), p);
  REQUIRE(b.per_mode.size() == kModes);
  CHECK(std::abs((1.0 - b.ideal) - p.intrinsic_infidelity) < 1e-9);
  const std::vector<double> w(kModes, 1.0 / kModes);
  for (double e : {0.2, 0.5, 0.8}) {
    const double lo = stray_photon_mix(b, w, e - 0.1);
    const double hi = stray_photon_mix(b, w, e + 0.1);
    CHECK(std::abs(stray_photon_mix(b, w, e) - 0.5 * (lo + hi)) < 1e-12);
  }

  const double eps = 0.4;
  auto spec = with_coupling(base(), p.g_ratio);
  const auto basis = build_basis(spec, {1, 2});
  const auto h = build_hamiltonian(spec, basis);
  const auto e0 = basis_vector(basis, BasisState::exc_a());
  Eigen::MatrixXcd rho0 = (1.0 - eps) * e0 * e0.adjoint();
  for (int k = 0; k < kModes; ++k) {
    const auto v = basis_vector(basis, BasisState::exc_a_photon(k));
    rho0 += eps * w[k] * v * v.adjoint();
  }
  const auto sched = make_schedule(p.scheme, p.g_ratio, p.kappa, p.tau_d);
  IntegratorConfig c;
  c.samples = 2;
  const auto sim = propagate_lindblad(basis, h, {}, Drive::transfer(sched), rho0, sched.duration(), c);
  CHECK(std::abs((1.0 - sim.final_p_b()) - stray_photon_mix(b, w, eps)) < 1e-8);

  const auto r = stray_photon_infidelity(base(), pulses(), {0.0, 1e-4, 0.5, 1.0});
  CHECK(r.parameter == "epsilon_p");
  check_layout(r);
  for (const auto& q : pulses()) {
    CHECK(std::abs(point(r, q.g_ratio, 0.0) - q.intrinsic_infidelity) < 1e-9);
    // Small contamination saturates at the intrinsic value.
    CHECK(std::abs(point(r, q.g_ratio, 1e-4) - q.intrinsic_infidelity) < 1e-4);
  }
}

TEST_CASE("stray-photon weights are validated") {
  const auto& p = pulses()[0];
  StrayPhotonOptions bad;
  bad.weights = std::vector<double>(kModes, 0.5 / kModes);
  CHECK_THROWS_AS(stray_photon_infidelity(base(), {p}, {0.1}, bad), std::invalid_argument);
  bad.weights = std::vector<double>(kModes - 1, 1.0 / (kModes - 1));
  CHECK_THROWS_AS(stray_photon_infidelity(base(), {p}, {0.1}, bad), std::invalid_argument);
  std::vector<double> neg(kModes, 0.0);
  neg[0] = 1.5;
  neg[1] = -0.5;
  bad.weights = neg;
  CHECK_THROWS_AS(stray_photon_infidelity(base(), {p}, {0.1}, bad), std::invalid_argument);
  // All weight on one mode reproduces that branch.
  std::vector<double> one(kModes, 0.0);
  one[3] = 1.0;
  StrayPhotonOptions single;
  single.weights = one;
  const auto r = stray_photon_infidelity(base(), {p}, {1.0}, single);
  const auto b = stray_photon_branches(base(), p);
  CHECK(r.points.front().infidelity == doctest::Approx(1.0 - b.per_mode[3]).epsilon(1e-14));
}

TEST_CASE("mixture studies refuse lossy systems and bad epsilons") {
  auto lossy = base();
  lossy.qubit_a.gamma = 1e-3;
  CHECK_THROWS_AS(leakage_infidelity(lossy, pulses(), {0.1}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(stray_photon_infidelity(lossy, pulses(), {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(leakage_infidelity(base(), pulses(), {1.5}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(stray_photon_infidelity(base(), pulses(), {-0.1}), std::invalid_argument);
}

#pragma once

// Physical description of the two-qubit / multimode-channel system.
//
// Units: every frequency and rate is an ordinary frequency measured in units
// of the free spectral range, and every time is measured in units of 1/nu_fsr.
// The factor 2*pi is applied exactly once, when the Hamiltonian and the
// dissipators are assembled (see statespace.hpp). With this convention a
// qubit resonantly coupled to a single mode with constant strength g shows
// Rabi oscillations of its excited population with period 1/(2g).

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qst {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct ChannelSpec {
  int n_modes = 51;
  double nu_fsr = 1.0;
  double central_detuning = 0.0;
  std::optional<std::vector<double>> disorder_offsets;
  double kappa_c = 0.0;

  int central_index() const { return (n_modes - 1) / 2; }
};

struct QubitSpec {
  int levels = 2;
  /// omega_q - omega_c in the rotating frame.
  double detuning = 0.0;
  /// Shift of the e<->f transition below g<->e. Only read when levels == 3.
  std::optional<double> anharmonicity;
  double gamma = 0.0;
  double g_max = 0.5;
};

struct SystemSpec {
  ChannelSpec channel;
  QubitSpec qubit_a;
  QubitSpec qubit_b;
  /// Mode index whose coupling sign is +1 for qubit B; the central mode when unset.
  std::optional<int> parity_origin;

  int resolved_parity_origin() const {
    return parity_origin.value_or(channel.central_index());
  }
};

/// Default system: 51 modes, two-level qubits resonant with the central mode,
/// no loss, equal maximum couplings.
SystemSpec default_spec(double g_ratio = 0.5, int n_modes = 51);

/// Sets g_max of both qubits.
SystemSpec with_coupling(SystemSpec spec, double g_ratio);

/// Every invariant violation of `spec`, one message each. Empty when valid.
std::vector<std::string> validate_spec(const SystemSpec& spec);

/// Delta_k = (k - k_c) * nu_fsr + central_detuning + xi_k.
std::vector<double> mode_detunings(const ChannelSpec& channel);

/// Three-segment hyperbolic-secant envelope: sech ramp up over tau = 6/kappa,
/// plateau of length tau_d at g0, mirrored sech ramp down.
struct PulseParams {
  double g0 = 0.5;
  double kappa = 1.0;
  double tau_d = 0.0;

  double tau() const { return 6.0 / kappa; }
  double t_cycle() const { return 2.0 * tau() + tau_d; }
};

/// Envelope value at time t; zero outside [0, t_cycle].
double pulse_envelope(const PulseParams& p, double t);

/// Segment boundaries {0, tau, tau + tau_d, t_cycle} of the envelope.
std::vector<double> pulse_knots(const PulseParams& p);

enum class Scheme { SimultaneousIdentical, DelayedMirror };

std::string to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

struct TransferSchedule {
  Scheme scheme = Scheme::SimultaneousIdentical;
  PulseParams pulse;
  /// Start delay of the qubit-B pulse; DelayedMirror only.
  double offset = 0.0;

  double duration() const {
    return scheme == Scheme::DelayedMirror ? pulse.t_cycle() + offset
                                           : pulse.t_cycle();
  }
};

/// Builds the schedule used by the two-parameter transfer optimization.
///
/// SimultaneousIdentical: both qubits follow the envelope (g0, kappa, tau_d).
/// DelayedMirror: both qubits follow a plateau-free envelope (g0, kappa, 0) and
/// qubit B starts `tau_d` later, so tau_d is the emission/absorption delay.
TransferSchedule make_schedule(Scheme scheme, double g0, double kappa,
                               double tau_d);

struct Couplings {
  double a = 0.0;
  double b = 0.0;
};

Couplings schedule_couplings(const TransferSchedule& s, double t);

/// Sorted, deduplicated times at which either envelope changes segment.
std::vector<double> schedule_knots(const TransferSchedule& s);

}  // namespace qst

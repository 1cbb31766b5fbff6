#include "qst/model.hpp"

#include <algorithm>

namespace qst {

SystemSpec default_spec(double g_ratio, int n_modes) {
  SystemSpec spec;
  spec.channel.n_modes = n_modes;
  return with_coupling(std::move(spec), g_ratio);
}

SystemSpec with_coupling(SystemSpec spec, double g_ratio) {
  spec.qubit_a.g_max = g_ratio;
  spec.qubit_b.g_max = g_ratio;
  return spec;
}

namespace {

void check_qubit(const QubitSpec& q, const std::string& name,
                 std::vector<std::string>& out) {
  if (q.levels != 2 && q.levels != 3) {
    out.push_back(name + ".levels must be 2 or 3");
  }
  if (q.levels == 3) {
    if (!q.anharmonicity) {
      out.push_back(name + ".anharmonicity required when levels = 3");
    } else if (!std::isfinite(*q.anharmonicity) || *q.anharmonicity <= 0.0) {
      out.push_back(name + ".anharmonicity must be finite and > 0");
    }
  }
  if (!std::isfinite(q.detuning)) out.push_back(name + ".detuning must be finite");
  if (!std::isfinite(q.gamma) || q.gamma < 0.0) {
    out.push_back(name + ".gamma must be finite and >= 0");
  }
  if (!std::isfinite(q.g_max) || q.g_max < 0.0) {
    out.push_back(name + ".g_max must be finite and >= 0");
  }
}

}  // namespace

std::vector<std::string> validate_spec(const SystemSpec& spec) {
  std::vector<std::string> out;
  const auto& ch = spec.channel;
  if (ch.n_modes % 2 == 0) out.push_back("n_modes must be odd");
  if (ch.n_modes < 3) out.push_back("n_modes must be >= 3");
  if (ch.nu_fsr != 1.0) out.push_back("nu_fsr is the unit and must equal 1");
  if (!std::isfinite(ch.central_detuning)) {
    out.push_back("central_detuning must be finite");
  }
  if (!std::isfinite(ch.kappa_c) || ch.kappa_c < 0.0) {
    out.push_back("kappa_c must be finite and >= 0");
  }
  if (ch.disorder_offsets) {
    if (static_cast<int>(ch.disorder_offsets->size()) != ch.n_modes) {
      out.push_back("disorder_offsets length must equal n_modes");
    }
    if (!std::all_of(ch.disorder_offsets->begin(), ch.disorder_offsets->end(),
                     [](double x) { return std::isfinite(x); })) {
      out.push_back("disorder_offsets must be finite");
    }
  }
  check_qubit(spec.qubit_a, "qubit_a", out);
  check_qubit(spec.qubit_b, "qubit_b", out);
  if (spec.parity_origin &&
      (*spec.parity_origin < 0 || *spec.parity_origin >= ch.n_modes)) {
    out.push_back("parity_origin must index a mode");
  }
  return out;
}

std::vector<double> mode_detunings(const ChannelSpec& channel) {
  const int n = channel.n_modes;
  const int kc = channel.central_index();
  std::vector<double> delta(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double d = (k - kc) * channel.nu_fsr + channel.central_detuning;
    if (channel.disorder_offsets) d += (*channel.disorder_offsets)[k];
    delta[k] = d;
  }
  return delta;
}

double pulse_envelope(const PulseParams& p, double t) {
  const double tau = p.tau();
  const double hold_end = tau + p.tau_d;
  const double end = hold_end + tau;
  if (t < 0.0 || t > end) return 0.0;
  if (t < tau) return p.g0 / std::cosh(p.kappa * (t - tau));
  if (t < hold_end) return p.g0;
  return p.g0 / std::cosh(p.kappa * (t - hold_end));
}

std::vector<double> pulse_knots(const PulseParams& p) {
  const double tau = p.tau();
  std::vector<double> knots{0.0, tau, tau + p.tau_d, 2.0 * tau + p.tau_d};
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

std::string to_string(Scheme s) {
  return s == Scheme::DelayedMirror ? "delayed-mirror" : "simultaneous";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "simultaneous") return Scheme::SimultaneousIdentical;
  if (name == "delayed-mirror") return Scheme::DelayedMirror;
  return std::nullopt;
}

TransferSchedule make_schedule(Scheme scheme, double g0, double kappa,
                               double tau_d) {
  TransferSchedule s;
  s.scheme = scheme;
  s.pulse = PulseParams{g0, kappa, tau_d};
  if (scheme == Scheme::DelayedMirror) {
    s.pulse.tau_d = 0.0;
    s.offset = tau_d;
  }
  return s;
}

Couplings schedule_couplings(const TransferSchedule& s, double t) {
  const double ga = pulse_envelope(s.pulse, t);
  if (s.scheme == Scheme::SimultaneousIdentical) return {ga, ga};
  return {ga, pulse_envelope(s.pulse, t - s.offset)};
}

std::vector<double> schedule_knots(const TransferSchedule& s) {
  std::vector<double> knots = pulse_knots(s.pulse);
  if (s.scheme == Scheme::DelayedMirror) {
    for (double k : pulse_knots(s.pulse)) knots.push_back(k + s.offset);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

}  // namespace qst

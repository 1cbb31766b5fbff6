#include "qst/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qst {

using nlohmann::json;

namespace {

constexpr std::pair<Experiment, const char*> kExperiments[] = {
    {Experiment::RoundTrip, "round-trip"},
    {Experiment::Transfer, "transfer"},
    {Experiment::Optimize, "optimize"},
    {Experiment::SweepDissipation, "sweep-dissipation"},
    {Experiment::SweepDisorder, "sweep-disorder"},
    {Experiment::SweepDetuning, "sweep-detuning"},
    {Experiment::SweepLeakage, "sweep-leakage"},
    {Experiment::SweepStrayPhoton, "sweep-stray-photon"},
    {Experiment::FitTrends, "fit-trends"},
};

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

// Typed, path-aware view of one JSON object. Every key must be consumed or
// listed; leftovers are reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void mark(const std::string& key) { seen_.insert(key); }

  std::string at(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key), "must be finite");
    return x;
  }

  std::optional<double> maybe_number(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        throw ConfigError(join(at(key), std::to_string(i)), "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    if (out.empty()) throw ConfigError(at(key), "must not be empty");
    return out;
  }

  std::optional<Node> child(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), at(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

QubitSpec parse_qubit(Node n) {
  QubitSpec q;
  q.levels = static_cast<int>(n.integer("levels", q.levels));
  q.detuning = n.number("detuning", q.detuning);
  q.anharmonicity = n.maybe_number("anharmonicity");
  q.gamma = n.number("gamma", q.gamma);
  n.finish();
  return q;
}

void parse_system(Node n, SystemSpec& s) {
  auto& c = s.channel;
  c.n_modes = static_cast<int>(n.integer("n_modes", c.n_modes));
  c.nu_fsr = n.number("nu_fsr", c.nu_fsr);
  require(c.nu_fsr == 1.0, n.at("nu_fsr"), "frequencies are in units of nu_fsr; must be 1");
  c.central_detuning = n.number("central_detuning", c.central_detuning);
  c.kappa_c = n.number("kappa_c", c.kappa_c);
  if (auto d = n.numbers("disorder_offsets")) c.disorder_offsets = *d;
  if (n.has("parity_origin")) {
    s.parity_origin = static_cast<int>(n.integer("parity_origin", 0));
  } else {
    n.mark("parity_origin");
  }
  if (auto q = n.child("qubit_a")) s.qubit_a = parse_qubit(*q);
  if (auto q = n.child("qubit_b")) s.qubit_b = parse_qubit(*q);
  n.finish();
}

void parse_scan(Node n, ScanRange& r) {
  r.kappa_min = n.number("kappa_min", r.kappa_min);
  r.kappa_max = n.number("kappa_max", r.kappa_max);
  r.kappa_points = static_cast<int>(n.integer("kappa_points", r.kappa_points));
  r.tau_d_min = n.number("tau_d_min", r.tau_d_min);
  r.tau_d_max = n.number("tau_d_max", r.tau_d_max);
  r.tau_d_points = static_cast<int>(n.integer("tau_d_points", r.tau_d_points));
  n.finish();
  require(r.kappa_min > 0.0 && r.kappa_max > r.kappa_min && r.kappa_points >= 2,
          n.at("kappa_min"), "kappa range must be positive, increasing, >= 2 points");
  require(r.tau_d_min >= 0.0 && r.tau_d_max > r.tau_d_min && r.tau_d_points >= 2,
          n.at("tau_d_min"), "tau_d range must be non-negative, increasing, >= 2 points");
}

void parse_optimizer(Node n, OptimizeOptions& o) {
  o.nelder_mead.diameter_tol = n.number("diameter_tol", o.nelder_mead.diameter_tol);
  o.nelder_mead.max_iterations =
      static_cast<int>(n.integer("max_iterations", o.nelder_mead.max_iterations));
  o.tie_tolerance = n.number("tie_tolerance", o.tie_tolerance);
  o.seed_infidelity = n.number("seed_infidelity", o.seed_infidelity);
  o.high_fidelity_infidelity = n.number("high_fidelity_infidelity", o.high_fidelity_infidelity);
  o.candidates = static_cast<int>(n.integer("candidates", o.candidates));
  n.finish();
  require(o.nelder_mead.diameter_tol > 0.0, n.at("diameter_tol"), "must be positive");
  require(o.nelder_mead.max_iterations > 0, n.at("max_iterations"), "must be positive");
  require(o.candidates >= 0, n.at("candidates"), "must be non-negative");
}

void parse_integrator(Node n, IntegratorConfig& c) {
  c.rtol = n.number("rtol", c.rtol);
  c.atol = n.number("atol", c.atol);
  if (n.has("max_step")) {
    c.max_step = n.number("max_step", c.max_step);
  } else {
    n.mark("max_step");
  }
  c.samples = static_cast<int>(n.integer("samples", c.samples));
  c.max_steps = n.integer("max_steps", c.max_steps);
  n.finish();
  require(c.rtol > 0.0, n.at("rtol"), "must be positive");
  require(c.atol > 0.0, n.at("atol"), "must be positive");
  require(c.max_step > 0.0, n.at("max_step"), "must be positive");
  require(c.samples >= 2, n.at("samples"), "must be at least 2");
  require(c.max_steps > 0, n.at("max_steps"), "must be positive");
}

std::vector<double> log_range(double lo_exp, double hi_exp, int per_decade) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
  for (int i = 0; i <= n; ++i) out.push_back(std::pow(10.0, lo_exp + double(i) / per_decade));
  return out;
}

std::vector<double> default_values(Experiment e, Dissipation which) {
  auto with_zero = [](std::vector<double> v) {
    v.insert(v.begin(), 0.0);
    return v;
  };
  switch (e) {
    case Experiment::SweepDissipation:
      return which == Dissipation::QubitDecay ? with_zero(log_range(-5, -2, 4))
                                              : with_zero(log_range(-5, -1, 4));
    case Experiment::SweepDisorder:
      return {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
    case Experiment::SweepDetuning:
      return {-0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02};
    case Experiment::SweepLeakage:
    case Experiment::SweepStrayPhoton:
      return with_zero(log_range(-4, 0, 4));
    default:
      return {};
  }
}

bool is_sweep(Experiment e) {
  switch (e) {
    case Experiment::SweepDissipation:
    case Experiment::SweepDisorder:
    case Experiment::SweepDetuning:
    case Experiment::SweepLeakage:
    case Experiment::SweepStrayPhoton:
      return true;
    default:
      return false;
  }
}

void parse_sweep(Node n, RunConfig& cfg) {
  auto& s = cfg.sweep;
  const std::string which = n.string("which", "gamma");
  if (which == "gamma") {
    s.which = Dissipation::QubitDecay;
  } else if (which == "kappa_c") {
    s.which = Dissipation::CavityLoss;
  } else {
    throw ConfigError(n.at("which"), "expected \"gamma\" or \"kappa_c\"");
  }
  if (auto v = n.numbers("values")) s.values = *v;
  s.lindblad_check = n.boolean("lindblad_check", s.lindblad_check);
  s.realizations = static_cast<int>(n.integer("realizations", s.realizations));
  s.symmetric = n.boolean("symmetric", s.symmetric);
  if (auto a = n.numbers("alphas")) s.alphas = *a;
  s.anharmonicity = n.maybe_number("anharmonicity");
  s.weights = n.numbers("weights");
  n.finish();
  require(s.realizations >= 1, n.at("realizations"), "must be at least 1");
  for (double a : s.alphas) require(a > 0.0, n.at("alphas"), "anharmonicities must be positive");
  if (s.anharmonicity) require(*s.anharmonicity > 0.0, n.at("anharmonicity"), "must be positive");
}

std::vector<OptimumRecord> parse_pulses(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of pulses");
  std::vector<OptimumRecord> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Node n(arr[i], join(path, std::to_string(i)));
    OptimumRecord r;
    r.g_ratio = n.number("g_ratio", std::numeric_limits<double>::quiet_NaN());
    r.kappa = n.number("kappa", std::numeric_limits<double>::quiet_NaN());
    r.tau_d = n.number("tau_d", std::numeric_limits<double>::quiet_NaN());
    n.finish();
    require(r.g_ratio > 0.0, n.at("g_ratio"), "required and must be positive");
    require(r.kappa > 0.0, n.at("kappa"), "required and must be positive");
    require(r.tau_d >= 0.0, n.at("tau_d"), "required and must be non-negative");
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : kExperiments) {
    if (k == e) return name;
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (const auto& [k, n] : kExperiments) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::optional<OptimumRecord> RunConfig::pulse_for(double g) const {
  for (const auto& p : pulses) {
    if (p.g_ratio == g) return p;
  }
  return std::nullopt;
}

RunConfig parse_config(const json& doc, std::optional<Experiment> experiment) {
  Node root(doc, "");
  RunConfig cfg;

  const std::string name = root.string("experiment", "");
  if (!name.empty()) {
    const auto e = parse_experiment(name);
    if (!e) throw ConfigError("/experiment", "unknown experiment \"" + name + "\"");
    if (experiment && *experiment != *e) {
      throw ConfigError("/experiment", "file says \"" + name + "\" but \"" +
                                           to_string(*experiment) + "\" was requested");
    }
    cfg.experiment = *e;
  } else if (experiment) {
    cfg.experiment = *experiment;
  } else {
    throw ConfigError("/experiment", "no experiment given");
  }
  const Experiment e = cfg.experiment;

  if (auto sys = root.child("system")) parse_system(*sys, cfg.system);

  const auto single = root.maybe_number("g_ratio");
  const auto many = root.numbers("g_ratios");
  if (single && many) throw ConfigError("/g_ratios", "give either g_ratio or g_ratios");
  if (single) {
    cfg.g_ratios = {*single};
  } else if (many) {
    cfg.g_ratios = *many;
  } else if (is_sweep(e)) {
    cfg.g_ratios = {0.2, 0.4, 0.6, 0.8};
  } else if (e == Experiment::FitTrends) {
    cfg.g_ratios = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  } else {
    throw ConfigError("/g_ratio", "required for " + to_string(e));
  }
  for (double g : cfg.g_ratios) require(g > 0.0, "/g_ratio", "coupling ratios must be positive");
  {
    auto sorted = cfg.g_ratios;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "/g_ratios",
            "coupling ratios must be distinct");
  }
  const bool single_run = e == Experiment::RoundTrip || e == Experiment::Transfer ||
                          e == Experiment::Optimize;
  require(!single_run || cfg.g_ratios.size() == 1, "/g_ratios",
          to_string(e) + " takes a single g_ratio");
  require(e != Experiment::FitTrends || cfg.g_ratios.size() >= 3, "/g_ratios",
          "fit-trends needs at least 3 coupling ratios");

  cfg.g_b = root.maybe_number("g_b");
  if (cfg.g_b) {
    if (e == Experiment::RoundTrip) {
      cfg.warnings.push_back("g_b is ignored: the round trip forces g_B = 0");
    } else if (*cfg.g_b != cfg.g_ratio() || cfg.g_ratios.size() != 1) {
      throw ConfigError("/g_b", "transfer schedules drive both qubits with g_ratio");
    }
  }

  const std::string scheme = root.string("scheme", to_string(cfg.scheme));
  const auto parsed = parse_scheme(scheme);
  if (!parsed) throw ConfigError("/scheme", "expected \"simultaneous\" or \"delayed-mirror\"");
  cfg.scheme = *parsed;

  const std::string coupling = root.string("coupling", "pulse");
  if (coupling == "constant") {
    require(e == Experiment::RoundTrip, "/coupling", "constant coupling applies to round-trip only");
    cfg.constant_coupling = true;
  } else if (coupling != "pulse") {
    throw ConfigError("/coupling", "expected \"pulse\" or \"constant\"");
  }
  cfg.t_final = root.maybe_number("t_final");
  if (cfg.t_final) require(*cfg.t_final > 0.0, "/t_final", "must be positive");
  require(!cfg.constant_coupling || cfg.t_final, "/t_final", "required with constant coupling");

  // A single pulse may be given inline as kappa / tau_d.
  const auto kappa = root.maybe_number("kappa");
  const auto tau_d = root.maybe_number("tau_d");
  if (kappa || tau_d) {
    require(kappa && tau_d, kappa ? "/tau_d" : "/kappa", "kappa and tau_d go together");
    require(cfg.g_ratios.size() == 1, "/kappa", "inline kappa/tau_d need a single g_ratio");
    require(*kappa > 0.0, "/kappa", "must be positive");
    require(*tau_d >= 0.0, "/tau_d", "must be non-negative");
    cfg.pulses.push_back({cfg.g_ratio(), *kappa, *tau_d});
  }
  if (root.has("pulses")) {
    require(cfg.pulses.empty(), "/pulses", "give either kappa/tau_d or pulses");
    cfg.pulses = parse_pulses(root.raw("pulses"), "/pulses");
  } else {
    root.mark("pulses");
  }

  if (auto n = root.child("scan")) parse_scan(*n, cfg.optimize.range);
  if (auto n = root.child("optimizer")) parse_optimizer(*n, cfg.optimize);
  if (auto n = root.child("integrator")) parse_integrator(*n, cfg.integrator);
  cfg.optimize.integrator = cfg.integrator;
  if (auto n = root.child("sweep")) {
    require(is_sweep(e), "/sweep", "only sweep experiments take a sweep section");
    parse_sweep(*n, cfg);
  }
  if (cfg.sweep.values.empty()) cfg.sweep.values = default_values(e, cfg.sweep.which);
  if (e == Experiment::SweepLeakage || e == Experiment::SweepStrayPhoton) {
    for (double v : cfg.sweep.values) {
      require(v >= 0.0 && v <= 1.0, "/sweep/values", "error probabilities must lie in [0, 1]");
    }
  }

  const long long seed = root.integer("seed", 0);
  require(seed >= 0, "/seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.workers = static_cast<int>(root.integer("workers", 0));
  require(cfg.workers >= 0, "/workers", "must be non-negative (0 = all cores)");
  cfg.optimize.workers = cfg.workers;
  cfg.out_dir = root.string("out", cfg.out_dir);
  root.finish();

  SystemSpec probe = with_coupling(cfg.system, cfg.g_ratios.front());
  const auto problems = validate_spec(probe);
  if (!problems.empty()) throw ConfigError("/system", problems.front());
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Experiment> experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError("", "malformed JSON in " + path + ": " + err.what());
  }
  return parse_config(doc, experiment);
}

namespace {

json qubit_json(const QubitSpec& q) {
  json j{{"levels", q.levels}, {"detuning", q.detuning}, {"gamma", q.gamma}};
  j["anharmonicity"] = q.anharmonicity ? json(*q.anharmonicity) : json(nullptr);
  return j;
}

}  // namespace

json to_json(const RunConfig& cfg) {
  const auto& c = cfg.system.channel;
  json system{{"n_modes", c.n_modes},
              {"nu_fsr", c.nu_fsr},
              {"central_detuning", c.central_detuning},
              {"kappa_c", c.kappa_c},
              {"parity_origin", cfg.system.resolved_parity_origin()},
              {"qubit_a", qubit_json(cfg.system.qubit_a)},
              {"qubit_b", qubit_json(cfg.system.qubit_b)}};
  system["disorder_offsets"] = c.disorder_offsets ? json(*c.disorder_offsets) : json(nullptr);

  json pulses = json::array();
  for (const auto& p : cfg.pulses) {
    pulses.push_back({{"g_ratio", p.g_ratio}, {"kappa", p.kappa}, {"tau_d", p.tau_d}});
  }
  const auto& r = cfg.optimize.range;
  const auto& o = cfg.optimize;
  const auto& i = cfg.integrator;
  const auto& s = cfg.sweep;
  json integrator{{"rtol", i.rtol}, {"atol", i.atol}, {"samples", i.samples},
                  {"max_steps", i.max_steps}};
  integrator["max_step"] = std::isfinite(i.max_step) ? json(i.max_step) : json(nullptr);

  json out{
      {"experiment", to_string(cfg.experiment)},
      {"system", system},
      {"g_ratios", cfg.g_ratios},
      {"scheme", to_string(cfg.scheme)},
      {"coupling", cfg.constant_coupling ? "constant" : "pulse"},
      {"pulses", pulses},
      {"scan",
       {{"kappa_min", r.kappa_min},
        {"kappa_max", r.kappa_max},
        {"kappa_points", r.kappa_points},
        {"tau_d_min", r.tau_d_min},
        {"tau_d_max", r.tau_d_max},
        {"tau_d_points", r.tau_d_points}}},
      {"optimizer",
       {{"diameter_tol", o.nelder_mead.diameter_tol},
        {"max_iterations", o.nelder_mead.max_iterations},
        {"tie_tolerance", o.tie_tolerance},
        {"seed_infidelity", o.seed_infidelity},
        {"high_fidelity_infidelity", o.high_fidelity_infidelity},
        {"candidates", o.candidates}}},
      {"integrator", integrator},
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"out", cfg.out_dir},
  };
  out["g_b"] = cfg.g_b ? json(*cfg.g_b) : json(nullptr);
  out["t_final"] = cfg.t_final ? json(*cfg.t_final) : json(nullptr);
  if (is_sweep(cfg.experiment)) {
    json sweep{{"values", s.values},
               {"which", s.which == Dissipation::QubitDecay ? "gamma" : "kappa_c"},
               {"lindblad_check", s.lindblad_check},
               {"realizations", s.realizations},
               {"symmetric", s.symmetric},
               {"alphas", s.alphas}};
    sweep["anharmonicity"] = s.anharmonicity ? json(*s.anharmonicity) : json(nullptr);
    sweep["weights"] = s.weights ? json(*s.weights) : json(nullptr);
    out["sweep"] = sweep;
  }
  return out;
}

}  // namespace qst

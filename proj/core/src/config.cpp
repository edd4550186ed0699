#include "smlpde/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "smlpde/errors.hpp"

namespace smlpde {

double ScheduleConfig::lambda(int m) const { return lambda0 * std::pow(a, m); }
double ScheduleConfig::mu(int m) const { return mu0 * std::pow(a, m); }
double ScheduleConfig::nu(int m) const { return nu0 * std::pow(b, -m); }

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.truth.kind = PhysicsKind::convection;
  c.truth.f_true = TruthFunction::parse("cubic");
  c.truth.kappa = 0;
  c.truth.u0_profiles = {Profile::parse("bump:0.8:0.5:0.1"), Profile::parse("bump:-0.6:0.5:0.1"),
                         Profile::parse("bump:0.5:0.5:0.1")};
  c.truth.phi_profiles = {{Profile::constant(0.4)}, {Profile::constant(-0.3)},
                          {Profile::constant(0.2)}};
  c.optimizer.base.max_iters = 2000;
  c.optimizer.base.rate = 1e-2;
  c.optimizer.base.final_rate = 1e-4;
  c.optimizer.base.grad_tol = 1e-8;
  c.probe.optimizer.max_iters = 20000;
  c.probe.optimizer.rate = 1e-2;
  c.probe.optimizer.final_rate = 1e-4;
  c.probe.optimizer.grad_tol = 1e-10;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  return out;
}

double to_double(const std::string& v, int line) {
  // strtod accepts inf/nan spellings; configs must be finite.
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
    throw ConfigError("malformed number '" + v + "'", line);
  return x;
}

long long to_integer(const std::string& v, int line) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("malformed integer '" + v + "'", line);
  return x;
}

int to_int(const std::string& v, int line) {
  const long long x = to_integer(v, line);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError("integer out of range '" + v + "'", line);
  return static_cast<int>(x);
}

std::uint64_t to_seed(const std::string& v, int line) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("malformed seed '" + v + "'", line);
  return x;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line);
}

template <typename F>
auto wrap(F&& f, int line) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), line);
  }
}

using Setter = std::function<void(const std::string&, int)>;

struct Schema {
  std::map<std::string, std::map<std::string, Setter>> sections;
};

Schema make_schema(ExperimentConfig& c, int& experiments, bool& experiments_set) {
  Schema s;
  auto num = [](double& dst) { return [&dst](const std::string& v, int l) { dst = to_double(v, l); }; };
  auto integer = [](int& dst) { return [&dst](const std::string& v, int l) { dst = to_int(v, l); }; };
  auto seed = [](std::uint64_t& dst) { return [&dst](const std::string& v, int l) { dst = to_seed(v, l); }; };
  auto flag = [](bool& dst) { return [&dst](const std::string& v, int l) { dst = to_bool(v, l); }; };
  auto method = [](OptimizerConfig& o) {
    return [&o](const std::string& v, int l) { o.method = wrap([&] { return method_from_string(v); }, l); };
  };

  auto& grid = s.sections["grid"];
  grid["d"] = integer(c.grid.d);
  grid["nx"] = integer(c.grid.nx);
  grid["nt"] = integer(c.grid.nt);
  grid["x_lo"] = num(c.grid.x_lo);
  grid["x_hi"] = num(c.grid.x_hi);
  grid["t_end"] = num(c.grid.t_end);

  auto& truth = s.sections["truth"];
  truth["kind"] = [&c](const std::string& v, int l) {
    c.truth.kind = wrap([&] { return physics_from_string(v); }, l);
  };
  truth["f_true"] = [&c](const std::string& v, int l) {
    c.truth.f_true = wrap([&] { return TruthFunction::parse(v); }, l);
  };
  truth["kappa"] = integer(c.truth.kappa);
  truth["experiments"] = [&](const std::string& v, int l) {
    experiments = to_int(v, l);
    experiments_set = true;
  };
  // u0_<l> and phi_<l> are matched dynamically in parse_config.

  auto& meas = s.sections["measurement"];
  meas["family"] = [&c](const std::string& v, int l) {
    c.measurement.family = wrap([&] { return measurement_from_string(v); }, l);
  };
  meas["noise0"] = num(c.measurement.noise0);
  meas["noise_decay"] = num(c.measurement.noise_decay);
  meas["seed"] = seed(c.measurement.seed);

  auto& obj = s.sections["objective"];
  obj["q"] = num(c.objective.q);
  obj["r"] = num(c.objective.r);
  obj["rho"] = num(c.objective.rho);
  obj["param_norm_p"] = [&c](const std::string& v, int l) {
    c.objective.param_norm_p = v == "inf" ? std::numeric_limits<double>::infinity() : to_double(v, l);
  };
  obj["box_margin"] = num(c.objective.box_margin);
  obj["lattice_per_axis"] = integer(c.objective.lattice_per_axis);
  obj["halton_points"] = integer(c.objective.halton_points);
  obj["tau0_factor"] = num(c.objective.tau0_factor);
  obj["tau_decay"] = num(c.objective.tau_decay);
  obj["hard_gradsup"] = flag(c.objective.hard_gradsup);
  obj["enforce_box"] = flag(c.objective.enforce_box);

  auto& sch = s.sections["schedule"];
  sch["m_max"] = integer(c.schedule.m_max);
  sch["lambda0"] = num(c.schedule.lambda0);
  sch["mu0"] = num(c.schedule.mu0);
  sch["a"] = num(c.schedule.a);
  sch["nu0"] = num(c.schedule.nu0);
  sch["b"] = num(c.schedule.b);
  sch["beta_hat"] = num(c.schedule.beta_hat);

  auto& net = s.sections["network"];
  net["width0"] = integer(c.network.width0);
  net["depth"] = integer(c.network.depth);
  net["width_mode"] = [&c](const std::string& v, int l) {
    if (v == "linear") c.network.width_mode = WidthMode::linear;
    else if (v == "constant") c.network.width_mode = WidthMode::constant;
    else throw ConfigError("width_mode must be linear or constant, got '" + v + "'", l);
  };
  net["activation"] = [&c](const std::string& v, int l) {
    c.network.activation = wrap([&] { return activation_from_string(v); }, l);
  };
  net["seed"] = seed(c.network.seed);

  auto& opt = s.sections["optimizer"];
  opt["method"] = method(c.optimizer.base);
  opt["max_iters"] = integer(c.optimizer.base.max_iters);
  opt["rate"] = num(c.optimizer.base.rate);
  opt["final_rate"] = num(c.optimizer.base.final_rate);
  opt["grad_tol"] = num(c.optimizer.base.grad_tol);
  opt["restarts"] = integer(c.optimizer.restarts);
  opt["warm_start"] = flag(c.optimizer.warm_start);
  opt["init_smoothing"] = num(c.optimizer.init_smoothing);

  auto& probe = s.sections["probe"];
  probe["function"] = [&c](const std::string& v, int l) {
    c.probe.function = wrap([&] { return TruthFunction::parse(v); }, l);
  };
  probe["lo"] = num(c.probe.lo);
  probe["hi"] = num(c.probe.hi);
  probe["widths"] = [&c](const std::string& v, int l) {
    c.probe.widths.clear();
    for (const auto& tok : split_list(v, ',')) c.probe.widths.push_back(to_int(tok, l));
  };
  probe["depth"] = integer(c.probe.depth);
  probe["train_points"] = integer(c.probe.train_points);
  probe["heldout_points"] = integer(c.probe.heldout_points);
  probe["method"] = method(c.probe.optimizer);
  probe["max_iters"] = integer(c.probe.optimizer.max_iters);
  probe["rate"] = num(c.probe.optimizer.rate);
  probe["final_rate"] = num(c.probe.optimizer.final_rate);
  probe["grad_tol"] = num(c.probe.optimizer.grad_tol);
  probe["seed"] = seed(c.probe.seed);

  auto& gc = s.sections["gradcheck"];
  gc["samples"] = integer(c.gradcheck.samples);
  gc["step"] = num(c.gradcheck.step);
  gc["seed"] = seed(c.gradcheck.seed);

  auto& out = s.sections["output"];
  out["dir"] = [&c](const std::string& v, int l) {
    if (v.empty()) throw ConfigError("output dir must not be empty", l);
    c.output_dir = v;
  };
  return s;
}

// Matches `<prefix><positive integer>` and returns the integer, else 0.
int indexed_key(const std::string& key, const std::string& prefix) {
  if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size()) return 0;
  const std::string rest = key.substr(prefix.size());
  if (rest[0] == '0') return 0;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (ec != std::errc() || ptr != rest.data() + rest.size() || v < 1) return 0;
  return v;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what, 0); };
  try {
    (void)grid.make();
  } catch (const InvalidArgument& e) {
    fail(std::string("grid: ") + e.what());
  }
  if (truth.experiments() < 1) fail("truth: need at least one experiment");
  if (static_cast<int>(truth.phi_profiles.size()) != truth.experiments())
    fail("truth: need one phi_<l> entry per experiment");
  for (int l = 0; l < truth.experiments(); ++l)
    if (static_cast<int>(truth.phi_profiles[l].size()) != parameter_slots(truth.kind))
      fail("truth: phi_" + std::to_string(l + 1) + " needs " +
           std::to_string(parameter_slots(truth.kind)) + " comma-separated profiles for '" +
           to_string(truth.kind) + "'");
  if (truth.kappa < 0 || truth.kappa > 2) fail("truth: kappa must be 0, 1 or 2");
  if (truth.kind != PhysicsKind::none && grid.d != 1) fail("truth: spatial physics needs d = 1");
  if (measurement.noise0 < 0.0) fail("measurement: noise0 must be >= 0");
  Weights w;
  w.q = objective.q;
  w.r = objective.r;
  w.rho = objective.rho;
  w.param_norm_p = objective.param_norm_p;
  try {
    w.validate();
  } catch (const InvalidArgument& e) {
    fail(std::string("objective: ") + e.what());
  }
  if (objective.q < 2.0 || objective.r < 2.0 || objective.rho < 2.0)
    fail("objective: the optimizer path needs q, r, rho >= 2");
  if (objective.box_margin < 1.1) fail("objective: box_margin must be >= 1.1");
  if (objective.lattice_per_axis < 2) fail("objective: lattice_per_axis must be >= 2");
  if (objective.halton_points < 1) fail("objective: halton_points must be >= 1");
  if (!(objective.tau0_factor > 0.0)) fail("objective: tau0_factor must be > 0");
  if (schedule.m_max < 1) fail("schedule: m_max must be >= 1");
  if (!(schedule.lambda0 >= 0.0 && schedule.mu0 >= 0.0 && schedule.nu0 >= 0.0))
    fail("schedule: base weights must be >= 0");
  if (!(schedule.a > 0.0 && schedule.b > 0.0)) fail("schedule: growth factors must be > 0");
  if (network.width0 < 1) fail("network: width0 must be >= 1");
  if (network.depth < 1) fail("network: depth must be >= 1");
  if (optimizer.base.max_iters < 1) fail("optimizer: max_iters must be >= 1");
  if (!(optimizer.base.rate > 0.0)) fail("optimizer: rate must be > 0");
  if (optimizer.base.final_rate < 0.0 || probe.optimizer.final_rate < 0.0)
    fail("final_rate must be >= 0");
  if (optimizer.restarts < 1) fail("optimizer: restarts must be >= 1");
  if (optimizer.init_smoothing < 0.0) fail("optimizer: init_smoothing must be >= 0");
  if (!(probe.hi > probe.lo)) fail("probe: need hi > lo");
  if (probe.widths.empty()) fail("probe: widths must not be empty");
  for (int w : probe.widths)
    if (w < 1) fail("probe: widths must be >= 1");
  if (probe.depth < 1) fail("probe: depth must be >= 1");
  if (probe.train_points < 2 || probe.heldout_points < 2) fail("probe: need at least 2 points");
  if (probe.optimizer.max_iters < 1) fail("probe: max_iters must be >= 1");
  if (gradcheck.samples < 1) fail("gradcheck: samples must be >= 1");
  if (!(gradcheck.step >= 1e-7 && gradcheck.step <= 1e-3)) fail("gradcheck: step must be in [1e-7, 1e-3]");
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c = default_config();
  int experiments = c.truth.experiments();
  bool experiments_set = false;
  Schema schema = make_schema(c, experiments, experiments_set);

  std::map<int, std::pair<std::string, int>> u0_lines, phi_lines;
  std::set<std::string> seen;
  std::set<std::string> seen_sections;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("malformed section header '" + text + "'", line);
      section = trim(text.substr(1, text.size() - 2));
      if (!schema.sections.count(section)) throw ConfigError("unknown section [" + section + "]", line);
      if (!seen_sections.insert(section).second)
        throw ConfigError("duplicate section [" + section + "]", line);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + text + "'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    if (section.empty()) throw ConfigError("key '" + key + "' appears before any [section]", line);
    if (!seen.insert(section + "." + key).second)
      throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
    if (value.empty()) throw ConfigError("missing value for key '" + key + "'", line);

    if (section == "truth") {
      if (const int idx = indexed_key(key, "u0_")) {
        u0_lines[idx] = {value, line};
        continue;
      }
      if (const int idx = indexed_key(key, "phi_")) {
        phi_lines[idx] = {value, line};
        continue;
      }
    }
    auto& keys = schema.sections[section];
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
    it->second(value, line);
  }

  // Per-experiment profiles replace the defaults as a block.
  if (experiments_set || !u0_lines.empty() || !phi_lines.empty()) {
    if (experiments < 1) throw ConfigError("truth: experiments must be >= 1", 0);
    std::vector<Profile> u0(experiments);
    std::vector<std::vector<Profile>> phi(experiments);
    for (const auto& [idx, vl] : u0_lines)
      if (idx > experiments)
        throw ConfigError("u0_" + std::to_string(idx) + " exceeds experiments = " +
                              std::to_string(experiments), vl.second);
    for (const auto& [idx, vl] : phi_lines)
      if (idx > experiments)
        throw ConfigError("phi_" + std::to_string(idx) + " exceeds experiments = " +
                              std::to_string(experiments), vl.second);
    for (int l = 1; l <= experiments; ++l) {
      const auto u = u0_lines.find(l);
      if (u == u0_lines.end()) throw ConfigError("missing required key 'u0_" + std::to_string(l) + "' in [truth]", 0);
      u0[l - 1] = wrap([&] { return Profile::parse(u->second.first); }, u->second.second);
      const auto p = phi_lines.find(l);
      if (parameter_slots(c.truth.kind) == 0) {
        if (p != phi_lines.end() && p->second.first != "none")
          throw ConfigError("phi_" + std::to_string(l) + " must be 'none' for kind '" +
                                to_string(c.truth.kind) + "'", p->second.second);
        continue;
      }
      if (p == phi_lines.end())
        throw ConfigError("missing required key 'phi_" + std::to_string(l) + "' in [truth]", 0);
      for (const auto& tok : split_list(p->second.first, ','))
        phi[l - 1].push_back(wrap([&] { return Profile::parse(tok); }, p->second.second));
    }
    c.truth.u0_profiles = std::move(u0);
    c.truth.phi_profiles = std::move(phi);
  } else if (parameter_slots(c.truth.kind) == 0) {
    for (auto& p : c.truth.phi_profiles) p.clear();
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'", 0);
  return parse_config(is);
}

void print_config(std::ostream& os, const ExperimentConfig& c) {
  auto f = format_short;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "# smlpde experiment configuration\n\n";
  os << "[grid]\n";
  os << "d = " << c.grid.d << "\n";
  os << "nx = " << c.grid.nx << "\n";
  os << "nt = " << c.grid.nt << "\n";
  os << "x_lo = " << f(c.grid.x_lo) << "\n";
  os << "x_hi = " << f(c.grid.x_hi) << "\n";
  os << "t_end = " << f(c.grid.t_end) << "\n\n";

  os << "[truth]\n";
  os << "# kind: none | convection | diffusion_reaction | burgers1d\n";
  os << "kind = " << to_string(c.truth.kind) << "\n";
  os << "# f_true: cubic | sine | logistic | zero | linear:<c>\n";
  os << "f_true = " << c.truth.f_true.str() << "\n";
  os << "kappa = " << c.truth.kappa << "\n";
  os << "experiments = " << c.truth.experiments() << "\n";
  os << "# profiles: constant:c | linear:a:b | sinusoidal:amp:freq:offset | bump:amp:center:width\n#   | plateau:amp:center:half_width:edge\n";
  for (int l = 0; l < c.truth.experiments(); ++l) {
    os << "u0_" << l + 1 << " = " << c.truth.u0_profiles[l].str() << "\n";
    std::string phi;
    if (l < static_cast<int>(c.truth.phi_profiles.size()))
      for (const auto& p : c.truth.phi_profiles[l]) phi += (phi.empty() ? "" : ",") + p.str();
    os << "phi_" << l + 1 << " = " << (phi.empty() ? "none" : phi) << "\n";
  }
  os << "\n";

  os << "[measurement]\n";
  os << "# family: full | subsample | smooth; noise_m = noise0 / m^noise_decay\n";
  os << "family = " << to_string(c.measurement.family) << "\n";
  os << "noise0 = " << f(c.measurement.noise0) << "\n";
  os << "noise_decay = " << f(c.measurement.noise_decay) << "\n";
  os << "seed = " << c.measurement.seed << "\n\n";

  os << "[objective]\n";
  os << "q = " << f(c.objective.q) << "\n";
  os << "r = " << f(c.objective.r) << "\n";
  os << "rho = " << f(c.objective.rho) << "\n";
  os << "param_norm_p = "
     << (std::isinf(c.objective.param_norm_p) ? std::string("inf") : f(c.objective.param_norm_p)) << "\n";
  os << "box_margin = " << f(c.objective.box_margin) << "\n";
  os << "lattice_per_axis = " << c.objective.lattice_per_axis << "\n";
  os << "halton_points = " << c.objective.halton_points << "\n";
  os << "# tau_m = tau0_factor * (initial hard gradsup) / m^tau_decay\n";
  os << "tau0_factor = " << f(c.objective.tau0_factor) << "\n";
  os << "tau_decay = " << f(c.objective.tau_decay) << "\n";
  os << "hard_gradsup = " << b(c.objective.hard_gradsup) << "\n";
  os << "enforce_box = " << b(c.objective.enforce_box) << "\n\n";

  os << "[schedule]\n";
  os << "# lambda_m = lambda0 a^m, mu_m = mu0 a^m, nu_m = nu0 b^-m\n";
  os << "m_max = " << c.schedule.m_max << "\n";
  os << "lambda0 = " << f(c.schedule.lambda0) << "\n";
  os << "mu0 = " << f(c.schedule.mu0) << "\n";
  os << "a = " << f(c.schedule.a) << "\n";
  os << "nu0 = " << f(c.schedule.nu0) << "\n";
  os << "b = " << f(c.schedule.b) << "\n";
  os << "beta_hat = " << f(c.schedule.beta_hat) << "\n\n";

  os << "[network]\n";
  os << "# width_m = width0 * m (linear) or width0 (constant); depth counts affine layers\n";
  os << "width0 = " << c.network.width0 << "\n";
  os << "depth = " << c.network.depth << "\n";
  os << "width_mode = " << (c.network.width_mode == WidthMode::linear ? "linear" : "constant") << "\n";
  os << "activation = " << to_string(c.network.activation) << "\n";
  os << "seed = " << c.network.seed << "\n\n";

  os << "[optimizer]\n";
  os << "# method: adaptive | gd_linesearch\n";
  os << "method = " << to_string(c.optimizer.base.method) << "\n";
  os << "max_iters = " << c.optimizer.base.max_iters << "\n";
  os << "rate = " << f(c.optimizer.base.rate) << "\n";
  os << "# adaptive only: geometric decay to final_rate over max_iters (0 keeps rate fixed)\n";
  os << "final_rate = " << f(c.optimizer.base.final_rate) << "\n";
  os << "grad_tol = " << f(c.optimizer.base.grad_tol) << "\n";
  os << "restarts = " << c.optimizer.restarts << "\n";
  os << "warm_start = " << b(c.optimizer.warm_start) << "\n";
  os << "init_smoothing = " << f(c.optimizer.init_smoothing) << "\n\n";

  os << "[probe]\n";
  os << "function = " << c.probe.function.str() << "\n";
  os << "lo = " << f(c.probe.lo) << "\n";
  os << "hi = " << f(c.probe.hi) << "\n";
  std::string widths;
  for (int w : c.probe.widths) widths += (widths.empty() ? "" : ",") + std::to_string(w);
  os << "widths = " << widths << "\n";
  os << "depth = " << c.probe.depth << "\n";
  os << "train_points = " << c.probe.train_points << "\n";
  os << "heldout_points = " << c.probe.heldout_points << "\n";
  os << "method = " << to_string(c.probe.optimizer.method) << "\n";
  os << "max_iters = " << c.probe.optimizer.max_iters << "\n";
  os << "rate = " << f(c.probe.optimizer.rate) << "\n";
  os << "final_rate = " << f(c.probe.optimizer.final_rate) << "\n";
  os << "grad_tol = " << f(c.probe.optimizer.grad_tol) << "\n";
  os << "seed = " << c.probe.seed << "\n\n";

  os << "[gradcheck]\n";
  os << "samples = " << c.gradcheck.samples << "\n";
  os << "step = " << f(c.gradcheck.step) << "\n";
  os << "seed = " << c.gradcheck.seed << "\n\n";

  os << "[output]\n";
  os << "dir = " << c.output_dir << "\n";
}

}  // namespace smlpde

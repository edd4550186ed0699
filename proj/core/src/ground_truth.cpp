#include "smlpde/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "smlpde/errors.hpp"

namespace smlpde {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

double parse_number(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw InvalidArgument("");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("malformed number '" + s + "' in '" + context + "'");
  }
}

}  // namespace

TruthFunction TruthFunction::parse(const std::string& spec) {
  TruthFunction f;
  const auto parts = split(spec, ':');
  const std::string& name = parts.empty() ? spec : parts[0];
  const std::size_t nargs = parts.empty() ? 0 : parts.size() - 1;
  if (name == "cubic") f.kind_ = Kind::cubic;
  else if (name == "sine") f.kind_ = Kind::sine;
  else if (name == "logistic") f.kind_ = Kind::logistic;
  else if (name == "zero") f.kind_ = Kind::zero;
  else if (name == "linear") {
    f.kind_ = Kind::linear;
    if (nargs != 1) throw InvalidArgument("linear needs one coefficient: linear:c");
    f.coefficient_ = parse_number(parts[1], spec);
    return f;
  } else {
    throw InvalidArgument("unknown ground-truth function '" + spec + "'");
  }
  if (nargs != 0) throw InvalidArgument("'" + name + "' takes no arguments");
  return f;
}

double TruthFunction::value(double u) const {
  switch (kind_) {
    case Kind::cubic: return u - u * u * u;
    case Kind::sine: return std::sin(u);
    case Kind::logistic: return u * (1.0 - u);
    case Kind::zero: return 0.0;
    case Kind::linear: return coefficient_ * u;
  }
  return 0.0;
}

double TruthFunction::derivative(double u) const {
  switch (kind_) {
    case Kind::cubic: return 1.0 - 3.0 * u * u;
    case Kind::sine: return std::cos(u);
    case Kind::logistic: return 1.0 - 2.0 * u;
    case Kind::zero: return 0.0;
    case Kind::linear: return coefficient_;
  }
  return 0.0;
}

std::string TruthFunction::str() const {
  switch (kind_) {
    case Kind::cubic: return "cubic";
    case Kind::sine: return "sine";
    case Kind::logistic: return "logistic";
    case Kind::zero: return "zero";
    case Kind::linear: return "linear:" + format_short(coefficient_);
  }
  return "zero";
}

Profile Profile::parse(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw InvalidArgument("empty profile");
  Profile p;
  std::size_t want = 0;
  if (parts[0] == "constant") { p.kind_ = Kind::constant; want = 1; }
  else if (parts[0] == "linear") { p.kind_ = Kind::linear; want = 2; }
  else if (parts[0] == "sinusoidal") { p.kind_ = Kind::sinusoidal; want = 3; }
  else if (parts[0] == "bump") { p.kind_ = Kind::bump; want = 3; }
  else if (parts[0] == "plateau") { p.kind_ = Kind::plateau; want = 4; }
  else throw InvalidArgument("unknown profile '" + spec + "'");
  if (parts.size() != want + 1)
    throw InvalidArgument("profile '" + parts[0] + "' takes " + std::to_string(want) + " arguments");
  p.args_.clear();
  for (std::size_t i = 1; i < parts.size(); ++i) p.args_.push_back(parse_number(parts[i], spec));
  if (p.kind_ == Kind::bump && !(p.args_[2] > 0.0)) throw InvalidArgument("bump width must be > 0");
  if (p.kind_ == Kind::plateau && !(p.args_[2] > 0.0 && p.args_[3] > 0.0))
    throw InvalidArgument("plateau half width and edge must be > 0");
  return p;
}

Profile Profile::constant(double c) {
  Profile p;
  p.args_ = {c};
  return p;
}

double Profile::operator()(double x) const {
  const auto& a = args_;
  switch (kind_) {
    case Kind::constant: return a[0];
    case Kind::linear: return a[0] + a[1] * x;
    case Kind::sinusoidal: return a[2] + a[0] * std::sin(std::numbers::pi * a[1] * x);
    case Kind::bump: {
      const double r = (x - a[1]) / a[2];
      return a[0] * std::exp(-r * r);
    }
    case Kind::plateau:
      return 0.5 * a[0] * (std::tanh((x - a[1] + a[2]) / a[3]) - std::tanh((x - a[1] - a[2]) / a[3]));
  }
  return 0.0;
}

std::string Profile::str() const {
  std::string s;
  switch (kind_) {
    case Kind::constant: s = "constant"; break;
    case Kind::linear: s = "linear"; break;
    case Kind::sinusoidal: s = "sinusoidal"; break;
    case Kind::bump: s = "bump"; break;
    case Kind::plateau: s = "plateau"; break;
  }
  for (double v : args_) s += ":" + format_short(v);
  return s;
}

PhysicalParams true_parameters(const GroundTruthSpec& spec, const Grid& g) {
  const int L = spec.experiments();
  if (L < 1) throw InvalidArgument("ground truth needs at least one experiment");
  if (static_cast<int>(spec.phi_profiles.size()) != L)
    throw InvalidArgument("need one parameter profile list per experiment");
  PhysicalParams p = PhysicalParams::zeros(spec.kind, g, L, 1);
  for (int l = 0; l < L; ++l) {
    if (static_cast<int>(spec.phi_profiles[l].size()) != parameter_slots(spec.kind))
      throw InvalidArgument("experiment " + std::to_string(l + 1) + " has " +
                            std::to_string(spec.phi_profiles[l].size()) + " parameter profiles, '" +
                            to_string(spec.kind) + "' needs " +
                            std::to_string(parameter_slots(spec.kind)));
    for (int k = 0; k < parameter_slots(spec.kind); ++k) {
      const Profile& prof = spec.phi_profiles[l][k];
      p.fields[l][0][k] =
          SpatialField::from_function(g, [&](std::span<const double> x) { return prof(x[0]); });
    }
  }
  return p;
}

namespace {

// Right-hand side F(u, phi) + f(u) on one spatial slice.
class RightHandSide {
 public:
  RightHandSide(const GroundTruthSpec& spec, const Grid& g, const std::vector<SpatialField>& phi)
      : spec_(spec), g_(g), phi_(phi), dx_(g.nx, g.dx, 1), dxx_(g.nx, g.dx, 2) {
    if (spec.kind != PhysicsKind::none) {
      if (g.d != 1) throw Unsupported("simulate supports spatial physics for d = 1 only");
      if (spec.kind == PhysicsKind::diffusion_reaction) {
        ax_.resize(g.nx);
        dx_.apply(phi_[0].values, ax_, 1, 1);
      }
    }
  }

  void operator()(std::span<const double> u, std::span<double> out) {
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = spec_.f_true.value(u[i]);
    if (spec_.kind == PhysicsKind::none) return;
    ux_.resize(n);
    dx_.apply(u, ux_, 1, 1);
    switch (spec_.kind) {
      case PhysicsKind::convection:
        for (std::size_t i = 0; i < n; ++i) out[i] += phi_[0].values[i] * ux_[i];
        break;
      case PhysicsKind::diffusion_reaction:
        uxx_.resize(n);
        dxx_.apply(u, uxx_, 1, 1);
        for (std::size_t i = 0; i < n; ++i)
          out[i] += phi_[0].values[i] * uxx_[i] + ax_[i] * ux_[i] + phi_[1].values[i] * u[i];
        break;
      case PhysicsKind::burgers1d:
        for (std::size_t i = 0; i < n; ++i) out[i] -= u[i] * ux_[i];
        break;
      case PhysicsKind::none: break;
    }
    out[0] = 0.0;
    out[n - 1] = 0.0;
  }

 private:
  const GroundTruthSpec& spec_;
  const Grid& g_;
  const std::vector<SpatialField>& phi_;
  Stencil1D dx_, dxx_;
  std::vector<double> ax_, ux_, uxx_;
};

double stable_step(const GroundTruthSpec& spec, const Grid& g, const std::vector<SpatialField>& phi,
                   double u0_sup) {
  constexpr double safety = 0.5;
  double limit = std::numeric_limits<double>::infinity();
  switch (spec.kind) {
    case PhysicsKind::convection: {
      const double v = sup_norm(phi[0].values);
      if (v > 0) limit = safety * g.dx / v;
      break;
    }
    case PhysicsKind::diffusion_reaction: {
      const double a = sup_norm(phi[0].values);
      if (a > 0) limit = safety * g.dx * g.dx / (2.0 * a);
      break;
    }
    case PhysicsKind::burgers1d:
      if (u0_sup > 0) limit = safety * g.dx / u0_sup;
      break;
    case PhysicsKind::none: break;
  }
  return limit;
}

}  // namespace

int simulation_substeps(const GroundTruthSpec& spec, const Grid& g) {
  const PhysicalParams phi = true_parameters(spec, g);
  int steps = 1;
  for (int l = 0; l < spec.experiments(); ++l) {
    const SpatialField u0 = SpatialField::from_function(
        g, [&](std::span<const double> x) { return spec.u0_profiles[l](x[0]); });
    const double h = stable_step(spec, g, phi.fields[l][0], sup_norm(u0.values));
    if (std::isfinite(h)) steps = std::max(steps, static_cast<int>(std::ceil(g.dt / h - 1e-12)));
  }
  return steps;
}

StateTrajectory simulate(const GroundTruthSpec& spec, const Grid& g) {
  const PhysicalParams phi = true_parameters(spec, g);
  const int substeps = simulation_substeps(spec, g);
  const double h = g.dt / substeps;
  const std::size_t ns = g.spatial_size();
  StateTrajectory out;
  for (int l = 0; l < spec.experiments(); ++l) {
    Field u(g);
    std::vector<double> cur(ns);
    for (std::size_t s = 0; s < ns; ++s) cur[s] = spec.u0_profiles[l](g.coords(s)[0]);
    std::copy(cur.begin(), cur.end(), u.slice(0).begin());
    const double start_sup = std::max(sup_norm(cur), 1e-300);
    RightHandSide rhs(spec, g, phi.fields[l][0]);
    std::vector<double> k1(ns), k2(ns), k3(ns), k4(ns), tmp(ns);
    std::size_t step = 0;
    for (int n = 1; n < g.nt; ++n) {
      for (int sub = 0; sub < substeps; ++sub, ++step) {
        rhs(cur, k1);
        for (std::size_t i = 0; i < ns; ++i) tmp[i] = cur[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < ns; ++i) tmp[i] = cur[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < ns; ++i) tmp[i] = cur[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < ns; ++i)
          cur[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        const double sup = sup_norm(cur);
        if (!std::isfinite(sup) || sup > 1e6 * start_sup)
          throw Diverged("ground-truth simulation of experiment " + std::to_string(l + 1) + " blew up",
                         step);
      }
      std::copy(cur.begin(), cur.end(), u.slice(n).begin());
    }
    out.push_back({std::move(u)});
  }
  return out;
}

Dataset make_dataset(const StateTrajectory& truth, const MeasurementOp& op, double noise_level,
                     std::uint64_t seed) {
  Dataset data;
  data.kind = op.kind();
  data.m = op.m();
  data.noise_level = noise_level;
  data.seed = seed;
  for (std::size_t l = 0; l < truth.size(); ++l) {
    ExperimentData exp;
    for (std::size_t e = 0; e < truth[l].size(); ++e) {
      const Field& u = truth[l][e];
      // Distinct but reproducible streams per experiment and equation.
      exp.y.push_back(add_noise(op.apply(u), noise_level, seed + (l + 1) + 7919 * e));
      SpatialField u0(u.grid);
      std::copy(u.slice(0).begin(), u.slice(0).end(), u0.values.begin());
      exp.u0.push_back(std::move(u0));
      exp.g.push_back(u.grid.d == 1 ? boundary_trace(u) : BoundaryTrace{});
    }
    data.experiments.push_back(std::move(exp));
  }
  return data;
}

Dataset make_dataset(const GroundTruthSpec& spec, const Grid& g, const MeasurementOp& op,
                     double noise_level, std::uint64_t seed) {
  return make_dataset(simulate(spec, g), op, noise_level, seed);
}

}  // namespace smlpde

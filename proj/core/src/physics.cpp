#include "smlpde/physics.hpp"

#include <algorithm>
#include <cmath>

#include "smlpde/errors.hpp"

namespace smlpde {

std::string to_string(PhysicsKind kind) {
  switch (kind) {
    case PhysicsKind::none: return "none";
    case PhysicsKind::convection: return "convection";
    case PhysicsKind::diffusion_reaction: return "diffusion_reaction";
    case PhysicsKind::burgers1d: return "burgers1d";
  }
  return "none";
}

PhysicsKind physics_from_string(const std::string& name) {
  if (name == "none") return PhysicsKind::none;
  if (name == "convection") return PhysicsKind::convection;
  if (name == "diffusion_reaction") return PhysicsKind::diffusion_reaction;
  if (name == "burgers1d") return PhysicsKind::burgers1d;
  throw InvalidArgument("unknown physics kind '" + name + "'");
}

int parameter_slots(PhysicsKind kind) {
  switch (kind) {
    case PhysicsKind::convection: return 1;
    case PhysicsKind::diffusion_reaction: return 2;
    default: return 0;
  }
}

PhysicalParams PhysicalParams::zeros(PhysicsKind kind, const Grid& g, int experiments,
                                     int equations) {
  PhysicalParams p;
  p.kind = kind;
  p.fields.assign(experiments, std::vector<std::vector<SpatialField>>(
                                   equations, std::vector<SpatialField>(parameter_slots(kind),
                                                                        SpatialField(g))));
  return p;
}

namespace {

void check_layout(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi) {
  if (static_cast<int>(phi.size()) != parameter_slots(kind))
    throw InvalidArgument("physics '" + to_string(kind) + "' expects " +
                          std::to_string(parameter_slots(kind)) + " parameter fields, got " +
                          std::to_string(phi.size()));
  for (const auto& f : phi)
    if (f.values.size() != u.grid.spatial_size())
      throw InvalidArgument("parameter field does not match the state grid");
  if (kind != PhysicsKind::none && u.grid.d != 1)
    throw Unsupported("physics '" + to_string(kind) + "' is implemented for d = 1 only");
}

const MultiIndex kDx{1};
const MultiIndex kDxx{2};

}  // namespace

Field apply_physics(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi) {
  check_layout(kind, u, phi);
  const Grid& g = u.grid;
  const std::size_t ns = g.spatial_size();
  Field out(g);
  switch (kind) {
    case PhysicsKind::none: break;
    case PhysicsKind::convection: {
      const Field ux = spatial_derivative(u, kDx);
      for (int n = 0; n < g.nt; ++n)
        for (std::size_t s = 0; s < ns; ++s) out.at(n, s) = phi[0].values[s] * ux.at(n, s);
      break;
    }
    case PhysicsKind::diffusion_reaction: {
      const Field ux = spatial_derivative(u, kDx);
      const Field uxx = spatial_derivative(u, kDxx);
      const SpatialField ax = spatial_derivative(phi[0], kDx);
      for (int n = 0; n < g.nt; ++n)
        for (std::size_t s = 0; s < ns; ++s)
          out.at(n, s) = phi[0].values[s] * uxx.at(n, s) + ax.values[s] * ux.at(n, s) +
                         phi[1].values[s] * u.at(n, s);
      break;
    }
    case PhysicsKind::burgers1d: {
      const Field ux = spatial_derivative(u, kDx);
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = -u.values[i] * ux.values[i];
      break;
    }
  }
  return out;
}

void physics_adjoint(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi,
                     std::span<const double> adj, std::span<double> adj_u,
                     std::span<std::vector<double>> adj_phi) {
  check_layout(kind, u, phi);
  const Grid& g = u.grid;
  const std::size_t ns = g.spatial_size();
  const std::size_t nt = static_cast<std::size_t>(g.nt);
  std::vector<double> tmp(u.values.size());
  switch (kind) {
    case PhysicsKind::none: break;
    case PhysicsKind::convection: {
      const Field ux = spatial_derivative(u, kDx);
      for (int n = 0; n < g.nt; ++n)
        for (std::size_t s = 0; s < ns; ++s) {
          const double a = adj[n * ns + s];
          tmp[n * ns + s] = phi[0].values[s] * a;
          adj_phi[0][s] += a * ux.at(n, s);
        }
      spatial_derivative_adjoint(g, kDx, tmp, adj_u, nt);
      break;
    }
    case PhysicsKind::diffusion_reaction: {
      const Field ux = spatial_derivative(u, kDx);
      const Field uxx = spatial_derivative(u, kDxx);
      const SpatialField ax = spatial_derivative(phi[0], kDx);
      std::vector<double> tmp2(u.values.size());
      std::vector<double> adj_ax(ns, 0.0);
      for (int n = 0; n < g.nt; ++n)
        for (std::size_t s = 0; s < ns; ++s) {
          const std::size_t i = n * ns + s;
          const double a = adj[i];
          tmp[i] = phi[0].values[s] * a;
          tmp2[i] = ax.values[s] * a;
          adj_u[i] += phi[1].values[s] * a;
          adj_phi[0][s] += a * uxx.values[i];
          adj_ax[s] += a * ux.values[i];
          adj_phi[1][s] += a * u.values[i];
        }
      spatial_derivative_adjoint(g, kDxx, tmp, adj_u, nt);
      spatial_derivative_adjoint(g, kDx, tmp2, adj_u, nt);
      spatial_derivative_adjoint(g, kDx, adj_ax, adj_phi[0], 1);
      break;
    }
    case PhysicsKind::burgers1d: {
      const Field ux = spatial_derivative(u, kDx);
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        adj_u[i] -= ux.values[i] * adj[i];
        tmp[i] = -u.values[i] * adj[i];
      }
      spatial_derivative_adjoint(g, kDx, tmp, adj_u, nt);
      break;
    }
  }
}

std::size_t network_input_size(int d, int kappa, int equations) {
  return 1 + static_cast<std::size_t>(equations) * jet_dimension(d, kappa);
}

std::vector<JetField> state_jets(std::span<const Field> states, int kappa) {
  std::vector<JetField> jets;
  jets.reserve(states.size());
  for (const auto& u : states) jets.push_back(jet(u, kappa));
  return jets;
}

void gather_network_input(std::span<const JetField> jets, const Grid& g, int n, std::size_t s,
                          std::span<double> z) {
  std::size_t k = 0;
  z[k++] = g.t(n);
  for (const auto& j : jets)
    for (const auto& c : j.components) z[k++] = c.at(n, s);
}

std::vector<Field> residual(std::span<const Field> states,
                            std::span<const std::vector<SpatialField>> phi,
                            std::span<const MlpParams> nets, PhysicsKind kind, int kappa) {
  const std::size_t N = states.size();
  if (N == 0) throw InvalidArgument("residual needs at least one state");
  if (nets.size() != N || phi.size() != N)
    throw InvalidArgument("residual needs one network and one parameter slice per equation");
  const Grid& g = states[0].grid;
  const std::size_t in = network_input_size(g.d, kappa, static_cast<int>(N));
  for (const auto& net : nets)
    if (static_cast<std::size_t>(net.input_size()) != in)
      throw InvalidArgument("network input size " + std::to_string(net.input_size()) +
                            " != " + std::to_string(in));
  const auto jets = state_jets(states, kappa);
  std::vector<Field> out;
  for (std::size_t e = 0; e < N; ++e) {
    Field r = time_derivative(states[e]);
    const Field F = apply_physics(kind, states[e], phi[e]);
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= F.values[i];
    out.push_back(std::move(r));
  }
  std::vector<double> z(in);
  std::vector<MlpEvaluator> evals;
  for (const auto& net : nets) evals.emplace_back(net);
  const std::size_t ns = g.spatial_size();
  for (int n = 0; n < g.nt; ++n)
    for (std::size_t s = 0; s < ns; ++s) {
      gather_network_input(jets, g, n, s, z);
      for (std::size_t e = 0; e < N; ++e) out[e].at(n, s) -= evals[e].forward(z);
    }
  return out;
}

bool affine_check(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi1,
                  std::span<const SpatialField> phi2, double s) {
  if (phi1.size() != phi2.size()) throw InvalidArgument("parameter layouts differ");
  std::vector<SpatialField> mix;
  for (std::size_t k = 0; k < phi1.size(); ++k) {
    SpatialField m(phi1[k].grid);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      m.values[i] = s * phi1[k].values[i] + (1.0 - s) * phi2[k].values[i];
    mix.push_back(std::move(m));
  }
  const Field a = apply_physics(kind, u, mix);
  const Field b1 = apply_physics(kind, u, phi1);
  const Field b2 = apply_physics(kind, u, phi2);
  const double scale = std::max({sup_norm(a), sup_norm(b1), sup_norm(b2), 1e-300});
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double rhs = s * b1.values[i] + (1.0 - s) * b2.values[i];
    if (std::abs(a.values[i] - rhs) > 1e-10 * scale) return false;
  }
  return true;
}

}  // namespace smlpde

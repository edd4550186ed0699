#pragma once

#include <span>
#include <string>
#include <vector>

#include "smlpde/grid.hpp"
#include "smlpde/mlp.hpp"

namespace smlpde {

/// Known physical term F(t, u, phi) of the learned model
/// d_t u = F(t, u, phi) + f(t, J u). All kinds are one-dimensional in space
/// except `none`.
enum class PhysicsKind { none, convection, diffusion_reaction, burgers1d };

std::string to_string(PhysicsKind kind);
PhysicsKind physics_from_string(const std::string& name);

/// Number of spatial parameter fields per equation: none 0, convection 1
/// (velocity), diffusion_reaction 2 (a, c), burgers1d 0.
int parameter_slots(PhysicsKind kind);

/// States indexed [experiment l][equation n].
using StateTrajectory = std::vector<std::vector<Field>>;

/// Parameter fields indexed [experiment l][equation n][slot].
struct PhysicalParams {
  PhysicsKind kind = PhysicsKind::none;
  std::vector<std::vector<std::vector<SpatialField>>> fields;

  /// Zero parameters with the layout required by `kind`.
  static PhysicalParams zeros(PhysicsKind kind, const Grid& g, int experiments, int equations);
};

/// Nodewise F(u, phi):
///   none               0
///   convection         phi * d_x u
///   diffusion_reaction a * d_xx u + (d_x a) * (d_x u) + c * u
///   burgers1d          -u * d_x u
Field apply_physics(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi);

/// Adjoint of apply_physics: given adj = dJ/dF, adds dJ/du into `adj_u` and
/// dJ/dphi[slot] into `adj_phi[slot]`.
void physics_adjoint(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi,
                     std::span<const double> adj, std::span<double> adj_u,
                     std::span<std::vector<double>> adj_phi);

/// Network input at one node: (t, J u_1, ..., J u_N), each jet in
/// jet_indices order.
std::size_t network_input_size(int d, int kappa, int equations);

/// Jets of all states for one experiment: [equation][component].
std::vector<JetField> state_jets(std::span<const Field> states, int kappa);

/// Fills `z` with the network input at (time index n, spatial index s).
void gather_network_input(std::span<const JetField> jets, const Grid& g, int n, std::size_t s,
                          std::span<double> z);

/// PDE residual d_t u_n - F(u_n, phi_n) - f_theta_n(t, J u) for every
/// equation n of one experiment.
std::vector<Field> residual(std::span<const Field> states,
                            std::span<const std::vector<SpatialField>> phi,
                            std::span<const MlpParams> nets, PhysicsKind kind, int kappa);

/// Checks F(u, s phi1 + (1-s) phi2) == s F(u, phi1) + (1-s) F(u, phi2) to
/// relative 1e-10 at every node.
bool affine_check(PhysicsKind kind, const Field& u, std::span<const SpatialField> phi1,
                  std::span<const SpatialField> phi2, double s);

}  // namespace smlpde

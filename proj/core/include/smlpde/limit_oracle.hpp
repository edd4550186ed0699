#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smlpde/grid.hpp"
#include "smlpde/physics.hpp"

namespace smlpde {

/// Tiny instance of the constrained limit problem with the state pinned to
/// full noiseless data. One equation; kind none or convection.
struct LimitInstance {
  Grid grid;
  PhysicsKind kind = PhysicsKind::none;
  StateTrajectory u;  // [l][0]
  int kappa = 0;
  double rho = 2.0;
};

struct OracleOptions {
  std::uint64_t tie_break_seed = 0;
  double gap_tolerance = 1e-10;
  int max_newton_steps = 200;
};

/// Minimizer of the reduced problem over (phi, f): with u fixed, f is
/// determined at every visited point z_i = (t, J u) by the PDE as
/// f_i = d_t u - F(u, phi), so the problem becomes
///
///   min_phi,s  sum_l |phi^l|_2^2 + sum_i w_i |f_i(phi)|^rho + s
///   s.t.       |f_i - f_j| <= s |z_i - z_j|_1  for all visited pairs,
///
/// where w_i are the space-time quadrature weights and s bounds the gradient
/// sup-norm through divided differences. Solved by a log-barrier Newton
/// method started from a seeded random interior point.
struct OracleResult {
  bool feasible = true;
  std::string diagnostic;
  PhysicalParams phi;
  int dim = 0;                  // length of each point
  std::vector<double> points;   // distinct visited z, count x dim
  std::vector<double> f_values; // f at each point
  double gradsup = 0.0;
  double lrho = 0.0;
  double phi_norm = 0.0;        // sum_l |phi^l|_2^2
  double objective = 0.0;
  int newton_steps = 0;

  std::size_t count() const { return f_values.size(); }
};

OracleResult limit_oracle(const LimitInstance& instance, const OracleOptions& options = {});

}  // namespace smlpde

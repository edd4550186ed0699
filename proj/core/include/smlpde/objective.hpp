#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smlpde/grid.hpp"
#include "smlpde/measurement.hpp"
#include "smlpde/mlp.hpp"
#include "smlpde/physics.hpp"

namespace smlpde {

/// Weights and exponents of the penalized learning objective.
struct Weights {
  double lambda = 1.0;  // PDE residual, initial and boundary misfit
  double mu = 1.0;      // data misfit
  double nu = 0.1;      // parameter norm
  double q = 2.0;       // residual exponent
  double r = 2.0;       // data exponent
  double rho = 2.0;     // L^rho exponent of the f-regularizer
  double param_norm_p = 2.0;
  double tau = 0.1;     // smooth-max temperature

  /// Throws InvalidArgument on negative weights, q, r < 1, rho <= 1, tau <= 0.
  void validate() const;
};

/// Zero-centered L-infinity box U in R^D with a fixed deterministic sample
/// set: a tensor lattice with trapezoidal weights for D <= 2, a Halton set
/// with equal weights otherwise. Weights sum to one.
struct UBox {
  int dim = 0;
  double radius = 0.0;
  std::vector<double> samples;  // count x dim, row-major
  std::vector<double> sample_weights;

  std::size_t count() const { return sample_weights.size(); }
  std::span<const double> sample(std::size_t i) const {
    return {samples.data() + i * dim, static_cast<std::size_t>(dim)};
  }
  double volume() const;
  bool contains(std::span<const double> z) const;
};

struct UBoxSampling {
  int lattice_per_axis = 33;
  int halton_points = 4096;
};

/// Largest |component| over every jet component of every reference state.
double reference_jet_sup(const StateTrajectory& reference, int kappa);

/// Box with radius T + margin * jet_sup and dimension 1 + N * jet_dimension.
/// Throws InvalidArgument when margin < 1 or no jet bound is given.
UBox derive_ubox(const Grid& g, int kappa, int equations, double margin,
                 std::optional<double> jet_sup, const UBoxSampling& sampling = {});

struct FRegularizer {
  double lrho = 0.0;
  double gradsup = 0.0;       // hard or smoothed, as requested
  double hard_gradsup = 0.0;  // always the hard sample maximum
};

/// lrho = sum_n vol(U) * sum_s w_s |f_n(z_s)|^rho,
/// gradsup = sum_n (smooth_)max_s |grad f_n(z_s)|_inf.
/// When `grads` is non-null, d(lrho + gradsup)/d theta_n is added into
/// (*grads)[n] (flat layout).
FRegularizer f_regularizer(std::span<const MlpParams> nets, const UBox& box, double rho,
                           double tau, bool hard,
                           std::vector<std::vector<double>>* grads = nullptr);

struct ObjectiveBreakdown {
  double total = 0.0;
  double residual = 0.0;
  double initial = 0.0;
  double boundary = 0.0;
  double data = 0.0;
  double r0 = 0.0;
  double f_lrho = 0.0;
  double f_gradsup = 0.0;
  double theta_norm = 0.0;
  double hard_gradsup = 0.0;  // diagnostic, not part of the total

  double sum_of_parts() const {
    return residual + initial + boundary + data + r0 + f_lrho + f_gradsup + theta_norm;
  }
};

/// Joint optimization variable (u, phi, theta).
struct Variables {
  StateTrajectory u;
  PhysicalParams phi;
  std::vector<MlpParams> theta;

  std::size_t size() const;
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);
  /// Same shapes, all entries zero.
  Variables zeros_like() const;

  /// Flat index ranges of the three blocks, in pack() order.
  struct Blocks {
    std::size_t u_begin, u_end, phi_begin, phi_end, theta_begin, theta_end;
  };
  Blocks blocks() const;
};

/// Everything the objective needs besides the variables.
struct Problem {
  Grid grid;
  Dataset data;
  MeasurementOp op;
  PhysicsKind kind = PhysicsKind::none;
  int kappa = 0;
  Weights weights;
  UBox box;
  bool hard_gradsup = false;
  /// Throw JetContainmentError when a visited (t, jet) point leaves the box.
  bool enforce_box = false;

  int experiments() const { return static_cast<int>(data.experiments.size()); }
  int equations() const;
};

/// Sum over experiments and equations of the squared phi L2 norms plus
/// P(u) + P(d_t u) + sum_{1<=|beta|<=kappa} P(D^beta u), P = bochner_norm(., 2, 2)^2.
double r0(const PhysicalParams& phi, const StateTrajectory& u, int kappa);

ObjectiveBreakdown evaluate(const Variables& vars, const Problem& problem);

/// Breakdown plus the exact gradient of its total with respect to every
/// entry of (u, phi, theta). Requires q, r, rho >= 2.
ObjectiveBreakdown gradient(const Variables& vars, const Problem& problem, Variables& grad);

/// Largest violation max(|z_k| - radius) over visited nodes (<= 0 inside).
double box_excess(const Variables& vars, const Problem& problem);

}  // namespace smlpde

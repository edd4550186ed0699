#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smlpde/grid.hpp"
#include "smlpde/measurement.hpp"
#include "smlpde/physics.hpp"

namespace smlpde {

/// Closed-form nonlinearity of the ground-truth system, acting on the value
/// of the state:
///   cubic     u - u^3
///   sine      sin(u)
///   logistic  u (1 - u)
///   zero      0
///   linear:c  c u
class TruthFunction {
 public:
  enum class Kind { cubic, sine, logistic, zero, linear };

  TruthFunction() = default;
  static TruthFunction parse(const std::string& spec);

  Kind kind() const { return kind_; }
  double value(double u) const;
  double derivative(double u) const;
  std::string str() const;

 private:
  Kind kind_ = Kind::zero;
  double coefficient_ = 1.0;
};

/// Named spatial profile, written `name:arg:arg...`:
///   constant:c                 c
///   linear:a:b                 a + b x
///   sinusoidal:amp:freq:offset offset + amp sin(pi freq x)
///   bump:amp:center:width      amp exp(-((x - center) / width)^2)
///   plateau:amp:center:half:edge
///                              amp/2 (tanh((x - center + half) / edge)
///                                     - tanh((x - center - half) / edge))
class Profile {
 public:
  enum class Kind { constant, linear, sinusoidal, bump, plateau };

  Profile() = default;
  static Profile parse(const std::string& spec);
  static Profile constant(double c);

  double operator()(double x) const;
  std::string str() const;

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> args_{0.0};
};

struct GroundTruthSpec {
  PhysicsKind kind = PhysicsKind::none;
  TruthFunction f_true;
  /// Per experiment, one profile per parameter slot of `kind`.
  std::vector<std::vector<Profile>> phi_profiles;
  /// Per experiment.
  std::vector<Profile> u0_profiles;
  int kappa = 0;

  int experiments() const { return static_cast<int>(u0_profiles.size()); }
};

/// Parameter fields phi^l sampled from the spec's profiles (one equation).
PhysicalParams true_parameters(const GroundTruthSpec& spec, const Grid& g);

/// Method of lines with the grid's spatial stencils and classical RK4 in
/// time. For physics with spatial derivatives the boundary nodes are held at
/// the initial profile (time-constant Dirichlet data). The integrator takes
/// the smallest number of equal sub-steps per output interval that satisfies
/// dt <= 0.5 dx / sup|phi| (convection), 0.5 dx^2 / (2 sup a) (diffusion) or
/// 0.5 dx / sup|u0| (Burgers). Throws Diverged when the state becomes
/// non-finite or grows beyond 1e6 times its initial sup-norm.
StateTrajectory simulate(const GroundTruthSpec& spec, const Grid& g);

/// Sub-steps per output interval chosen by simulate().
int simulation_substeps(const GroundTruthSpec& spec, const Grid& g);

/// y^l = add_noise(K u^l, level, seed + l); initial and boundary data are
/// taken exactly from the trajectory.
Dataset make_dataset(const StateTrajectory& truth, const MeasurementOp& op, double noise_level,
                     std::uint64_t seed);

Dataset make_dataset(const GroundTruthSpec& spec, const Grid& g, const MeasurementOp& op,
                     double noise_level, std::uint64_t seed);

}  // namespace smlpde

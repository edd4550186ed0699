#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smlpde/objective.hpp"

namespace smlpde {

enum class Method { adaptive, gd_linesearch };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct OptimizerConfig {
  Method method = Method::adaptive;
  int max_iters = 1000;
  double grad_tol = 1e-8;
  /// Adam step size, or the first trial step of the line search.
  double rate = 1e-3;
  /// Adam only: when > 0 the step decays geometrically from `rate` at the
  /// first iteration to `final_rate` at the last.
  double final_rate = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double backtrack = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

/// Objective value (with its breakdown) and gradient at a flat point.
struct Evaluation {
  ObjectiveBreakdown breakdown;
  std::vector<double> gradient;
};

using ObjectiveFn = std::function<Evaluation(std::span<const double>)>;

struct TraceRow {
  int iter = 0;
  ObjectiveBreakdown breakdown;  // at the iterate, before the step
  double grad_inf = 0.0;
  double grad_sq = 0.0;
  /// Accepted step length of the line search (0 for the adaptive method and
  /// for the final row).
  double step = 0.0;
  double best_total = 0.0;
};

struct MinimizeResult {
  std::vector<double> x;  // best-so-far iterate
  ObjectiveBreakdown best;
  std::vector<TraceRow> trace;
  bool converged = false;
};

/// First-order minimization. Every iteration evaluates the objective at the
/// current iterate, records one trace row, stops when the gradient's sup-norm
/// drops below grad_tol and otherwise takes one step. Throws Diverged with
/// the iterate index when the objective or gradient at an iterate is not
/// finite. The line search treats non-finite trial values as rejected.
MinimizeResult minimize(std::vector<double> x0, const ObjectiveFn& fn, const OptimizerConfig& cfg,
                        const std::function<void(const TraceRow&)>& on_iter = {});

/// Worst relative error between fn's gradient and central differences over
/// `samples` coordinates drawn with a fixed seed (all coordinates when
/// samples >= x.size()). Relative error uses max(|fd|, |g|) as the scale;
/// coordinates where both vanish count as 0. Step must be in [1e-7, 1e-3].
double finite_diff_gradcheck(std::span<const double> x, const ObjectiveFn& fn, int samples,
                             double step, std::uint64_t seed = 7);

/// Same check on an explicit coordinate list.
double finite_diff_gradcheck_at(std::span<const double> x, const ObjectiveFn& fn,
                                std::span<const std::size_t> coords, double step);

/// Wraps gradient() of a problem as a closure over packed variables. The
/// template fixes the shapes used to unpack.
ObjectiveFn objective_closure(const Problem& problem, const Variables& shape_template);

/// Initial states from data: the measurements of each time slice with
/// unobserved nodes filled by linear interpolation, then lightly smoothed
/// (Gaussian blur with standard deviation `smoothing` in space units; 0 skips
/// it).
StateTrajectory initial_states(const Dataset& data, const MeasurementOp& op, double smoothing);

}  // namespace smlpde

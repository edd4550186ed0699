#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smlpde/ground_truth.hpp"
#include "smlpde/measurement.hpp"
#include "smlpde/mlp.hpp"
#include "smlpde/objective.hpp"
#include "smlpde/optimizer.hpp"

namespace smlpde {

struct GridConfig {
  int d = 1;
  int nx = 65;
  int nt = 65;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double t_end = 0.5;

  Grid make() const { return Grid::make(d, nx, nt, x_lo, x_hi, t_end); }
};

struct MeasurementConfig {
  MeasurementKind family = MeasurementKind::smooth;
  /// noise_m = noise0 / m^noise_decay
  double noise0 = 0.05;
  double noise_decay = 1.0;
  std::uint64_t seed = 1;
};

struct ObjectiveConfig {
  double q = 2.0;
  double r = 2.0;
  double rho = 2.0;
  double param_norm_p = 2.0;
  double box_margin = 1.1;
  int lattice_per_axis = 33;
  int halton_points = 4096;
  /// tau_m = tau0 / m^tau_decay with tau0 = tau0_factor * initial hard gradsup.
  double tau0_factor = 0.1;
  double tau_decay = 1.0;
  bool hard_gradsup = false;
  bool enforce_box = true;
};

struct ScheduleConfig {
  int m_max = 5;
  double lambda0 = 1.0;
  double mu0 = 1.0;
  double a = 4.0;
  double nu0 = 0.1;
  double b = 4.0;
  /// Approximation-rate estimate used for the lambda_m m^(-beta q) check.
  double beta_hat = 1.0;

  double lambda(int m) const;
  double mu(int m) const;
  double nu(int m) const;
};

enum class WidthMode { linear, constant };

struct NetworkConfig {
  int width0 = 8;
  int depth = 3;
  WidthMode width_mode = WidthMode::linear;
  ActivationKind activation = ActivationKind::tanh;
  std::uint64_t seed = 11;

  int width(int m) const { return width_mode == WidthMode::linear ? width0 * m : width0; }
};

struct StudyOptimizerConfig {
  OptimizerConfig base;
  int restarts = 3;
  bool warm_start = true;
  /// Gaussian smoothing (space units) of the data-based initial states.
  double init_smoothing = 0.0;
};

struct ProbeConfig {
  TruthFunction function = TruthFunction::parse("cubic");
  double lo = -2.0;
  double hi = 2.0;
  std::vector<int> widths{4, 8, 16, 32};
  int depth = 3;
  int train_points = 201;
  int heldout_points = 801;
  OptimizerConfig optimizer;
  std::uint64_t seed = 5;
};

struct GradcheckConfig {
  int samples = 50;
  double step = 1e-5;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  GridConfig grid;
  GroundTruthSpec truth;
  MeasurementConfig measurement;
  ObjectiveConfig objective;
  ScheduleConfig schedule;
  NetworkConfig network;
  StudyOptimizerConfig optimizer;
  ProbeConfig probe;
  GradcheckConfig gradcheck;
  std::string output_dir = "smlpde_out";

  /// Cross-field checks (profile counts, positive sizes, ...). Throws
  /// ConfigError without a line number.
  void validate() const;
};

/// The showcase experiment: three convection speeds with a cubic reaction.
ExperimentConfig default_config();

/// Strict parser for `key = value` lines grouped by `[section]` headers, with
/// `#` comments. Unknown sections or keys, duplicates and malformed values
/// raise ConfigError carrying the line number.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& path);

/// Writes every key with its current value; parse_config reads it back to
/// the same configuration.
void print_config(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace smlpde

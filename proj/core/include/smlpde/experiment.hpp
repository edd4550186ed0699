#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smlpde/config.hpp"
#include "smlpde/objective.hpp"

namespace smlpde {

struct StudyRow {
  int m = 0;
  std::string status = "ok";
  double lambda = 0, mu = 0, nu = 0, tau = 0, noise = 0;
  int width = 0;
  int iterations = 0;
  int restart = 0;  // index of the restart that produced the row
  ObjectiveBreakdown breakdown;
  double f_error = 0;      // max |f_theta - f_true| over visited ground-truth jets
  double grad_error = 0;   // max |grad f_theta - grad f_true|_inf over the same points
  double state_error = 0;  // sqrt(sum_l |u_m - u_true|^2), discrete L2
  double param_error = 0;  // sqrt(sum_l |phi_m - phi_true|^2), spatial L2
  double psi_hat = 0;      // param_norm of theta_m
};

struct ScheduleRow {
  int m = 0;
  double lambda = 0, mu = 0, nu = 0;
  double lambda_rate = 0;  // lambda_m m^(-beta_hat q)
  double nu_psi = 0;       // nu_m psi_hat(m)
};

struct ConvergenceReport {
  std::vector<StudyRow> rows;
  std::vector<ScheduleRow> schedule;
  double data_range = 0;  // max u_true - min u_true over all nodes
  double beta_hat = 0;
  bool lambda_rate_decreasing = true;
  bool nu_psi_decreasing = true;
};

/// Runs the m-indexed study. Files are written to `output_dir` unless it is
/// empty: report.csv, schedule.csv, trace_m{m}.csv, f_error.svg and the
/// datasets of every m. Progress lines go to `log` when non-null. A
/// diverged optimization or a jet leaving the box ends the study with the
/// failing row marked in `status`.
ConvergenceReport run_convergence_study(const ExperimentConfig& cfg, const std::string& output_dir,
                                        std::ostream* log = nullptr);

void write_report_csv(std::ostream& os, const ConvergenceReport& report);

struct ProbeRow {
  int width = 0;
  std::string status = "ok";
  int iterations = 0;
  double train_loss = 0;
  double sup_error = 0;       // held-out max |f_theta - f|
  double grad_sup_error = 0;  // held-out max |f_theta' - f'|
  double grad_sup = 0;        // held-out max |f_theta'|
  double param_norm = 0;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  double analytic_grad_sup = 0;  // held-out max |f'|
  /// Minus the least-squares slope of log(sup_error) against log(width), over
  /// rows with status ok and positive error; NaN with fewer than two.
  double beta_hat = 0;
};

/// Fits one-input networks of each width to the probe function on a uniform
/// training lattice by least squares (mean squared error) and measures them
/// on a finer held-out lattice. The output layer starts at zero so that the
/// initial network is the zero function. Writes probe.csv when `output_dir`
/// is non-empty.
ProbeReport approximation_probe(const ProbeConfig& cfg, double param_norm_p,
                                const std::string& output_dir, std::ostream* log = nullptr);

void write_probe_csv(std::ostream& os, const ProbeReport& report);

/// Largest relative gradient error per block (u, phi, theta) of the study's
/// m = 1 problem at its initial point.
struct GradcheckReport {
  double u = 0, phi = 0, theta = 0;
  std::size_t u_coords = 0, phi_coords = 0, theta_coords = 0;
};

GradcheckReport gradcheck_study(const ExperimentConfig& cfg);

}  // namespace smlpde

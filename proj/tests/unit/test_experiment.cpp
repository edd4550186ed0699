#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smlpde/experiment.hpp"

using namespace smlpde;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = default_config();
  c.grid.nx = 17;
  c.grid.nt = 9;
  c.truth.u0_profiles.resize(1);
  c.truth.phi_profiles.resize(1);
  c.network.width0 = 4;
  c.optimizer.base.max_iters = 150;
  c.optimizer.restarts = 1;
  c.schedule.m_max = 2;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("smlpde_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Study, ZeroFunctionIsLearned) {
  ExperimentConfig c = small_config();
  c.truth.f_true = TruthFunction::parse("zero");
  c.measurement.family = MeasurementKind::full;
  c.measurement.noise0 = 0.0;
  const ConvergenceReport r = run_convergence_study(c, "");
  ASSERT_EQ(r.rows.size(), 2u);
  ASSERT_GT(r.data_range, 0.0);
  for (const StudyRow& row : r.rows) {
    EXPECT_EQ(row.status, "ok");
    EXPECT_LT(row.f_error, 0.05 * r.data_range) << row.m;
  }
}

TEST(Study, ScheduleColumns) {
  const ExperimentConfig c = small_config();
  const ConvergenceReport r = run_convergence_study(c, "");
  ASSERT_EQ(r.rows.size(), 2u);
  for (const StudyRow& row : r.rows) {
    EXPECT_DOUBLE_EQ(row.lambda, c.schedule.lambda(row.m));
    EXPECT_DOUBLE_EQ(row.mu, c.schedule.mu(row.m));
    EXPECT_DOUBLE_EQ(row.nu, c.schedule.nu(row.m));
    EXPECT_DOUBLE_EQ(row.noise, c.measurement.noise0 / row.m);
    EXPECT_EQ(row.width, 4 * row.m);
    EXPECT_NEAR(row.breakdown.total, row.breakdown.sum_of_parts(), 1e-12 * row.breakdown.total);
  }
  EXPECT_DOUBLE_EQ(r.rows[1].tau, 0.5 * r.rows[0].tau);
  ASSERT_EQ(r.schedule.size(), 2u);
  EXPECT_DOUBLE_EQ(r.schedule[1].lambda_rate, 16.0 / 4.0);
}

TEST(Study, DegenerateScheduleRepeatsInputs) {
  ExperimentConfig c = small_config();
  c.measurement.family = MeasurementKind::full;
  c.measurement.noise0 = 0.0;
  c.schedule.a = 1.0;
  c.schedule.b = 1.0;
  c.objective.tau_decay = 0.0;
  c.network.width_mode = WidthMode::constant;
  c.optimizer.warm_start = false;
  const std::string dir = temp_dir("degenerate");
  const ConvergenceReport r = run_convergence_study(c, dir);
  ASSERT_EQ(r.rows.size(), 2u);
  const StudyRow &a = r.rows[0], &b = r.rows[1];
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.nu, b.nu);
  EXPECT_EQ(a.tau, b.tau);
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(slurp(dir + "/y_l1_m1.csv"), slurp(dir + "/y_l1_m2.csv"));
  // Only the network initialization differs, so both rows land close.
  EXPECT_NEAR(a.state_error, b.state_error, 0.5 * a.state_error + 1e-3);
  std::filesystem::remove_all(dir);
}

TEST(Study, WritesArtifactsAndIsDeterministic) {
  const ExperimentConfig c = small_config();
  const std::string d1 = temp_dir("det1"), d2 = temp_dir("det2");
  run_convergence_study(c, d1);
  run_convergence_study(c, d2);
  for (const char* f : {"report.csv", "schedule.csv", "trace_m1.csv", "trace_m2.csv", "f_error.svg",
                        "y_l1_m1.csv", "manifest_m2.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(d1 + "/" + f)) << f;
    EXPECT_EQ(slurp(d1 + "/" + f), slurp(d2 + "/" + f)) << f;
  }
  const std::string report = slurp(d1 + "/report.csv");
  EXPECT_EQ(report.rfind("m,status,lambda,mu,nu,tau,noise,width,", 0), 0u);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 3);
  const std::string trace = slurp(d1 + "/trace_m1.csv");
  EXPECT_EQ(trace.rfind("m,iter,total,residual,initial,boundary,data,r0,f_lrho,f_gradsup,theta_norm,hard_gradsup\n", 0),
            0u);
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 151);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(Study, DivergenceMarksRow) {
  ExperimentConfig c = small_config();
  c.optimizer.base.rate = 1e30;
  c.optimizer.base.max_iters = 20;
  const ConvergenceReport r = run_convergence_study(c, "");
  ASSERT_FALSE(r.rows.empty());
  EXPECT_NE(r.rows.back().status, "ok");
  EXPECT_TRUE(std::isnan(r.rows.back().f_error));
}

TEST(Probe, ZeroFunctionIsExact) {
  ProbeConfig p = default_config().probe;
  p.function = TruthFunction::parse("zero");
  p.optimizer.max_iters = 50;
  const ProbeReport r = approximation_probe(p, 2.0, "");
  ASSERT_EQ(r.rows.size(), p.widths.size());
  for (const ProbeRow& row : r.rows) EXPECT_LT(row.sup_error, 1e-6);
  EXPECT_EQ(r.analytic_grad_sup, 0.0);
}

TEST(Probe, AnalyticGradientAndSlope) {
  ProbeConfig p = default_config().probe;
  p.widths = {2, 4};
  p.optimizer.max_iters = 300;
  const ProbeReport r = approximation_probe(p, 2.0, "");
  EXPECT_NEAR(r.analytic_grad_sup, 11.0, 1e-12);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.beta_hat));
  const double want = -(std::log(r.rows[1].sup_error) - std::log(r.rows[0].sup_error)) / std::log(2.0);
  EXPECT_NEAR(r.beta_hat, want, 1e-12);
}

TEST(Gradcheck, StudyProblemAtStart) {
  ExperimentConfig c = small_config();
  const GradcheckReport r = gradcheck_study(c);
  EXPECT_GT(r.u_coords, 0u);
  EXPECT_GT(r.phi_coords, 0u);
  EXPECT_GT(r.theta_coords, 0u);
  EXPECT_LT(r.u, 1e-5);
  EXPECT_LT(r.phi, 1e-5);
  EXPECT_LT(r.theta, 1e-5);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/instances.hpp"
#include "smlpde/errors.hpp"
#include "smlpde/ground_truth.hpp"
#include "smlpde/objective.hpp"
#include "smlpde/optimizer.hpp"
#include "smlpde/smooth_max.hpp"

using namespace smlpde;
using support::InstanceShape;
using support::random_instance;

TEST(Weights, Validation) {
  Weights w;
  EXPECT_NO_THROW(w.validate());
  w.mu = -1;
  EXPECT_THROW(w.validate(), InvalidArgument);
  w = {};
  w.rho = 1.0;
  EXPECT_THROW(w.validate(), InvalidArgument);
  w = {};
  w.tau = 0.0;
  EXPECT_THROW(w.validate(), InvalidArgument);
}

TEST(SmoothMax, Examples) {
  const std::vector<double> same(10, 2.5);
  EXPECT_NEAR(smooth_max(same, 0.3), 2.5 + 0.3 * std::log(10.0), 1e-12);
  EXPECT_NEAR(smooth_max(std::vector<double>{1, 5, 2}, 1e-6), 5.0, 1e-4);
  // Large values do not overflow.
  EXPECT_NEAR(smooth_max(std::vector<double>{1e4, 1e4}, 1e-3), 1e4 + 1e-3 * std::log(2.0), 1e-9);
}

TEST(SmoothMax, BracketAndWeights) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> len(1, 50);
  for (double tau : {1.0, 0.1, 0.01})
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> v(len(rng));
      for (auto& x : v) x = u(rng);
      std::vector<double> w;
      const double s = smooth_max(v, tau, &w);
      const double mx = *std::max_element(v.begin(), v.end());
      EXPECT_LE(mx, s);
      EXPECT_LE(s, mx + tau * std::log(static_cast<double>(v.size())));
      double sum = 0;
      for (double x : w) sum += x;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(UBox, RadiusExamples) {
  const Grid g = Grid::make(1, 9, 5, 0, 1, 1.0);
  EXPECT_DOUBLE_EQ(derive_ubox(g, 0, 1, 1.1, 0.0).radius, 1.0);
  EXPECT_DOUBLE_EQ(derive_ubox(g, 0, 1, 1.5, 2.0).radius, 4.0);
  EXPECT_THROW(derive_ubox(g, 0, 1, 0.9, 1.0), InvalidArgument);
  EXPECT_THROW(derive_ubox(g, 0, 1, 1.1, std::nullopt), InvalidArgument);
}

TEST(UBox, ReferenceJetSup) {
  const Grid g = Grid::make(1, 33, 5, 0, 1, 1.0);
  const StateTrajectory zero{{Field(g)}};
  EXPECT_EQ(reference_jet_sup(zero, 1), 0.0);
  const StateTrajectory lin{{Field::from_function(g, [](double, std::span<const double> x) { return 3 * x[0]; })}};
  EXPECT_NEAR(reference_jet_sup(lin, 0), 3.0, 1e-12);
  EXPECT_NEAR(reference_jet_sup(lin, 1), 3.0, 1e-12);
}

TEST(UBox, SampleSets) {
  const Grid g = Grid::make(1, 9, 5, 0, 1, 1.0);
  const UBox b2 = derive_ubox(g, 0, 1, 1.1, 1.0);
  EXPECT_EQ(b2.dim, 2);
  EXPECT_EQ(b2.count(), 33u * 33u);
  const UBox b3 = derive_ubox(g, 1, 1, 1.1, 1.0, {5, 500});
  EXPECT_EQ(b3.dim, 3);
  EXPECT_EQ(b3.count(), 500u);
  const UBox b5 = derive_ubox(g, 1, 2, 1.1, 1.0);
  EXPECT_EQ(b5.dim, 5);
  EXPECT_EQ(b5.count(), 4096u);
  for (const UBox* b : {&b2, &b3, &b5}) {
    double sum = 0;
    for (double w : b->sample_weights) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 0; i < b->count(); ++i) EXPECT_TRUE(b->contains(b->sample(i)));
  }
  // Repeated derivation gives the same samples.
  EXPECT_EQ(derive_ubox(g, 1, 1, 1.1, 1.0, {5, 500}).samples, b3.samples);
}

TEST(FRegularizer, ConstantNetwork) {
  // radius 0.5 in two dimensions: unit volume.
  const Grid g = Grid::make(1, 9, 5, 0, 1, 0.5);
  const UBox box = derive_ubox(g, 0, 1, 1.1, 0.0);
  ASSERT_DOUBLE_EQ(box.volume(), 1.0);
  MlpParams net = MlpParams::zeros({2, 4, 1});
  net.biases.back()[0] = 1.7;
  const FRegularizer r = f_regularizer(std::vector{net}, box, 2.0, 0.1, true);
  EXPECT_NEAR(r.lrho, 1.7 * 1.7, 1e-12);
  EXPECT_EQ(r.gradsup, 0.0);
}

TEST(FRegularizer, AffineNetwork) {
  const Grid g = Grid::make(1, 9, 5, 0, 1, 1.0);
  const UBox box = derive_ubox(g, 0, 1, 1.1, 0.0);
  MlpParams net = MlpParams::zeros({2, 1});
  net.weights[0] = {3.0, 0.0};
  const FRegularizer hard = f_regularizer(std::vector{net}, box, 2.0, 0.01, true);
  EXPECT_NEAR(hard.gradsup, 3.0, 1e-12);
  EXPECT_NEAR(hard.lrho, 12.0, 12.0 * 5e-3);
  const FRegularizer soft = f_regularizer(std::vector{net}, box, 2.0, 0.01, false);
  EXPECT_GE(soft.gradsup, hard.gradsup);
  EXPECT_LE(soft.gradsup, hard.gradsup + 0.01 * std::log(static_cast<double>(box.count())));
  EXPECT_EQ(soft.hard_gradsup, hard.gradsup);
}

TEST(FRegularizer, DimensionMismatch) {
  const Grid g = Grid::make(1, 9, 5, 0, 1, 1.0);
  const UBox box = derive_ubox(g, 0, 1, 1.1, 0.0);
  EXPECT_THROW(f_regularizer(std::vector{MlpParams::zeros({3, 1})}, box, 2.0, 0.1, true), InvalidArgument);
}

TEST(R0, Examples) {
  const Grid g = Grid::make(1, 33, 33, 0, 1, 1.0);
  const PhysicalParams none = PhysicalParams::zeros(PhysicsKind::convection, g, 1, 1);
  EXPECT_EQ(r0(none, StateTrajectory{{Field(g)}}, 1), 0.0);
  EXPECT_NEAR(r0(none, StateTrajectory{{Field(g, 1.5)}}, 0), 2.25, 1e-12);
  const Field t = Field::from_function(g, [](double tt, std::span<const double>) { return tt; });
  EXPECT_NEAR(r0(none, StateTrajectory{{t}}, 0), 4.0 / 3.0, 1e-3);
  PhysicalParams phi = none;
  phi.fields[0][0][0] = SpatialField(g, 2.0);
  EXPECT_NEAR(r0(phi, StateTrajectory{{Field(g)}}, 0), 4.0, 1e-12);
}

TEST(R0, CountsSpatialDerivatives) {
  const Grid g = Grid::make(1, 33, 9, 0, 1, 1.0);
  const PhysicalParams none = PhysicalParams::zeros(PhysicsKind::none, g, 1, 1);
  const Field x = Field::from_function(g, [](double, std::span<const double> xx) { return xx[0]; });
  // int x^2 = 1/3, int (d_x x)^2 = 1.
  EXPECT_NEAR(r0(none, StateTrajectory{{x}}, 0), 1.0 / 3.0, 1e-3);
  EXPECT_NEAR(r0(none, StateTrajectory{{x}}, 1), 4.0 / 3.0, 1e-3);
  EXPECT_NEAR(r0(none, StateTrajectory{{x}}, 2), 4.0 / 3.0, 1e-3);
}

TEST(Evaluate, AccountingOnRandomConfigurations) {
  const PhysicsKind kinds[] = {PhysicsKind::none, PhysicsKind::convection, PhysicsKind::diffusion_reaction,
                               PhysicsKind::burgers1d};
  const MeasurementKind meas[] = {MeasurementKind::full, MeasurementKind::subsample, MeasurementKind::smooth};
  for (int trial = 0; trial < 100; ++trial) {
    InstanceShape s;
    s.kind = kinds[trial % 4];
    s.measurement = meas[trial % 3];
    s.kappa = trial % 3;
    s.q = 2.0 + trial % 2;
    s.hard_gradsup = trial % 5 == 0;
    const auto in = random_instance(s, 100 + trial);
    const ObjectiveBreakdown b = evaluate(in.vars, in.problem);
    EXPECT_NEAR(b.total, b.sum_of_parts(), 1e-12 * std::abs(b.total)) << trial;
    EXPECT_GT(b.total, 0.0);
  }
}

TEST(Evaluate, ZeroWeightsLeaveRegularizers) {
  auto in = random_instance({}, 3);
  in.problem.weights.lambda = in.problem.weights.mu = in.problem.weights.nu = 0.0;
  const ObjectiveBreakdown b = evaluate(in.vars, in.problem);
  EXPECT_EQ(b.residual + b.initial + b.boundary + b.data + b.theta_norm, 0.0);
  EXPECT_NEAR(b.total, b.r0 + b.f_lrho + b.f_gradsup, 1e-12 * b.total);
}

TEST(Evaluate, LinearInLambda) {
  auto in = random_instance({}, 4);
  const ObjectiveBreakdown a = evaluate(in.vars, in.problem);
  in.problem.weights.lambda *= 2.0;
  const ObjectiveBreakdown b = evaluate(in.vars, in.problem);
  EXPECT_NEAR(b.residual, 2.0 * a.residual, 1e-14 * b.residual);
  EXPECT_NEAR(b.initial, 2.0 * a.initial, 1e-14 * b.initial);
  EXPECT_NEAR(b.boundary, 2.0 * a.boundary, 1e-14 * b.boundary);
  EXPECT_GE(b.total, a.total);
}

TEST(Evaluate, ExactGroundTruthHasOnlyDiscretizationError) {
  GroundTruthSpec spec;
  spec.kind = PhysicsKind::none;
  spec.f_true = TruthFunction::parse("linear:-1");
  spec.u0_profiles = {Profile::parse("sinusoidal:0.5:1:0.2")};
  spec.phi_profiles = {{}};
  double prev = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Grid g = Grid::make(1, 9, 9 << k, 0, 1, 0.5);
    const StateTrajectory truth = simulate(spec, g);
    const MeasurementOp op = MeasurementOp::full(g);
    const Dataset data = make_dataset(truth, op, 0.0, 1);
    MlpParams f = MlpParams::zeros({2, 1});
    f.weights[0] = {0.0, -1.0};
    const UBox box = derive_ubox(g, 0, 1, 1.1, reference_jet_sup(truth, 0));
    Problem pr{g, data, op, spec.kind, 0, Weights{}, box, true, true};
    Variables v{truth, PhysicalParams::zeros(spec.kind, g, 1, 1), {f}};
    const ObjectiveBreakdown b = evaluate(v, pr);
    EXPECT_EQ(b.initial, 0.0);
    EXPECT_EQ(b.boundary, 0.0);
    EXPECT_EQ(b.data, 0.0);
    EXPECT_LT(b.residual, 1e-5);
    // Residual norm is second order in dt, so its square drops by ~16x.
    if (k > 0) EXPECT_GT(prev / b.residual, 12.0);
    prev = b.residual;
  }
}

TEST(Gradient, DataTermIgnoresPhi) {
  auto in = random_instance({}, 5);
  Variables g1 = in.vars.zeros_like(), g2 = in.vars.zeros_like();
  gradient(in.vars, in.problem, g1);
  in.problem.weights.mu *= 7.0;
  gradient(in.vars, in.problem, g2);
  const auto b = in.vars.blocks();
  const auto p1 = g1.pack(), p2 = g2.pack();
  for (std::size_t i = b.phi_begin; i < b.phi_end; ++i) EXPECT_EQ(p1[i], p2[i]);
}

TEST(Gradient, MatchesEvaluate) {
  const auto in = random_instance({}, 6);
  Variables g = in.vars.zeros_like();
  const ObjectiveBreakdown a = gradient(in.vars, in.problem, g);
  const ObjectiveBreakdown b = evaluate(in.vars, in.problem);
  EXPECT_DOUBLE_EQ(a.total, b.total);
}

namespace {

struct SweepCase {
  PhysicsKind kind;
  MeasurementKind measurement;
  int kappa;
  double q, r, rho, p;
  bool hard;
};

void PrintTo(const SweepCase& c, std::ostream* os) {
  *os << to_string(c.kind) << '/' << to_string(c.measurement) << "/kappa" << c.kappa;
}

double block_error(const support::Instance& in, std::size_t lo, std::size_t hi) {
  const ObjectiveFn fn = objective_closure(in.problem, in.vars);
  std::vector<std::size_t> coords;
  for (std::size_t i = lo; i < hi; ++i) coords.push_back(i);
  return finite_diff_gradcheck_at(in.vars.pack(), fn, coords, 1e-6);
}

}  // namespace

class GradientSweep : public ::testing::TestWithParam<SweepCase> {};

TEST_P(GradientSweep, EveryBlockMatchesFiniteDifferences) {
  const SweepCase c = GetParam();
  InstanceShape s;
  s.kind = c.kind;
  s.measurement = c.measurement;
  s.kappa = c.kappa;
  s.q = c.q;
  s.r = c.r;
  s.rho = c.rho;
  s.p = c.p;
  s.hard_gradsup = c.hard;
  s.nx = 5;
  s.nt = 5;
  s.width = 4;
  const auto in = random_instance(s, 40 + static_cast<int>(c.kind) * 7 + c.kappa);
  const auto b = in.vars.blocks();
  EXPECT_LT(block_error(in, b.u_begin, b.u_end), 1e-5);
  EXPECT_LT(block_error(in, b.phi_begin, b.phi_end), 1e-5);
  EXPECT_LT(block_error(in, b.theta_begin, b.theta_end), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(
    Objective, GradientSweep,
    ::testing::Values(SweepCase{PhysicsKind::none, MeasurementKind::full, 0, 2, 2, 2, 2, false},
                      SweepCase{PhysicsKind::convection, MeasurementKind::smooth, 0, 2, 2, 2, 2, false},
                      SweepCase{PhysicsKind::convection, MeasurementKind::subsample, 1, 3, 2, 3, 2, false},
                      SweepCase{PhysicsKind::diffusion_reaction, MeasurementKind::smooth, 0, 2, 3, 2, 3, false},
                      SweepCase{PhysicsKind::diffusion_reaction, MeasurementKind::full, 2, 2, 2, 2, 2, true},
                      SweepCase{PhysicsKind::burgers1d, MeasurementKind::smooth, 1, 2, 2, 2, 2, false}),
    [](const auto& info) {
      return to_string(info.param.kind) + "_k" + std::to_string(info.param.kappa) + "_" +
             std::to_string(info.index);
    });

TEST(Gradient, StationaryAtConvexMinimizer) {
  // lambda = mu = 0: the minimizer over (u, phi) with a zero network is zero.
  InstanceShape s;
  s.nx = 5;
  s.nt = 5;
  auto in = random_instance(s, 8);
  in.problem.weights.lambda = in.problem.weights.mu = 0.0;
  for (auto& w : in.vars.theta[0].weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : in.vars.theta[0].biases) std::fill(b.begin(), b.end(), 0.0);
  OptimizerConfig cfg;
  cfg.method = Method::gd_linesearch;
  cfg.max_iters = 20000;
  cfg.rate = 1.0;
  cfg.grad_tol = 1e-8;
  const auto res = minimize(in.vars.pack(), objective_closure(in.problem, in.vars), cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(res.trace.back().grad_inf, 1e-8);
}

TEST(Convexity, MidpointInPhiAndF) {
  // Fixed u; both endpoints share hidden layers, so f is affine in the
  // output layer and the midpoint network has the average f values.
  auto in = random_instance({}, 9);
  in.problem.weights.lambda = in.problem.weights.mu = in.problem.weights.nu = 0.0;
  in.problem.weights.rho = 2.0;
  Variables a = in.vars, b = in.vars, mid = in.vars;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> c(-1, 1);
  auto& fa = a.phi.fields[0][0][0].values;
  auto& fb = b.phi.fields[0][0][0].values;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    fa[i] = c(rng);
    fb[i] = c(rng);
    mid.phi.fields[0][0][0].values[i] = 0.5 * (fa[i] + fb[i]);
  }
  auto& wa = a.theta[0].weights.back();
  auto& wb = b.theta[0].weights.back();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    wa[i] = c(rng);
    wb[i] = c(rng);
    mid.theta[0].weights.back()[i] = 0.5 * (wa[i] + wb[i]);
  }
  const auto ea = evaluate(a, in.problem), eb = evaluate(b, in.problem), em = evaluate(mid, in.problem);
  const double strict_a = ea.r0 + ea.f_lrho, strict_b = eb.r0 + eb.f_lrho, strict_m = em.r0 + em.f_lrho;
  // For a quadratic the midpoint gap is a quarter of the quadratic form of a - b.
  Variables diff = in.vars.zeros_like();
  diff.theta = in.vars.theta;
  for (std::size_t i = 0; i < fa.size(); ++i) diff.phi.fields[0][0][0].values[i] = fa[i] - fb[i];
  for (std::size_t i = 0; i < wa.size(); ++i) diff.theta[0].weights.back()[i] = wa[i] - wb[i];
  diff.theta[0].biases.back()[0] = 0.0;
  const auto ed = evaluate(diff, in.problem);
  const double margin = 0.25 * (ed.r0 + ed.f_lrho);
  ASSERT_GT(margin, 0.0);
  EXPECT_LT(strict_m, 0.5 * (strict_a + strict_b) - 0.99 * margin);
  EXPECT_LE(em.f_gradsup, 0.5 * (ea.f_gradsup + eb.f_gradsup) + 1e-12);
}

TEST(BoxContainment, EnforcedWhenRequested) {
  auto in = random_instance({}, 11);
  EXPECT_LT(box_excess(in.vars, in.problem), 0.0);
  for (auto& v : in.vars.u[0][0].values) v *= 10.0;
  EXPECT_GT(box_excess(in.vars, in.problem), 0.0);
  EXPECT_NO_THROW(evaluate(in.vars, in.problem));
  in.problem.enforce_box = true;
  EXPECT_THROW(evaluate(in.vars, in.problem), JetContainmentError);
}

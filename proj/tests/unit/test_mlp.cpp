#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "smlpde/errors.hpp"
#include "smlpde/mlp.hpp"

using namespace smlpde;

namespace {

MlpParams affine(std::vector<double> w, double b) {
  MlpParams p = MlpParams::zeros({static_cast<int>(w.size()), 1});
  p.weights[0] = std::move(w);
  p.biases[0] = {b};
  return p;
}

MlpParams random_net(std::vector<int> sizes, ActivationKind kind, std::uint64_t seed) {
  MlpParams p = init_mlp(std::move(sizes), Activation{kind}, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& b : p.biases)
    for (auto& v : b) v = u(rng);
  return p;
}

std::vector<double> random_point(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> z(n);
  for (auto& v : z) v = u(rng);
  return z;
}

}  // namespace

TEST(Forward, ZeroWeightsGiveOutputBias) {
  MlpParams p = MlpParams::zeros({3, 4, 1});
  p.biases.back()[0] = 1.25;
  const double z[3] = {0.3, -2.0, 9.0};
  EXPECT_EQ(forward(p, z), 1.25);
}

TEST(Forward, SingleAffineLayer) {
  const double z[1] = {3.0};
  EXPECT_EQ(forward(affine({2.0}, 1.0), z), 7.0);
}

TEST(Forward, HandComputedTanhNet) {
  // Two inputs, two tanh units, one output.
  MlpParams p = MlpParams::zeros({2, 2, 1});
  p.weights[0] = {0.5, -1.0, 0.25, 2.0};
  p.biases[0] = {0.1, -0.2};
  p.weights[1] = {1.5, -0.5};
  p.biases[1] = {0.3};
  const double z[2] = {0.4, -0.3};
  const double h0 = std::tanh(0.5 * 0.4 - 1.0 * -0.3 + 0.1);
  const double h1 = std::tanh(0.25 * 0.4 + 2.0 * -0.3 - 0.2);
  EXPECT_NEAR(forward(p, z), 1.5 * h0 - 0.5 * h1 + 0.3, 1e-15);
  EXPECT_NEAR(forward(p, z), 1.407758239055635, 1e-14);
}

TEST(Forward, DimensionMismatch) {
  const MlpParams p = MlpParams::zeros({2, 3, 1});
  const double z[3] = {0, 0, 0};
  EXPECT_THROW(forward(p, std::span<const double>(z, 3)), InvalidArgument);
  EXPECT_THROW(grad_input(p, std::span<const double>(z, 1)), InvalidArgument);
  EXPECT_THROW(backprop(p, std::span<const double>(z, 3), 1.0), InvalidArgument);
}

TEST(GradInput, AffineAndZero) {
  const double z[2] = {5.0, -4.0};
  EXPECT_EQ(grad_input(affine({2.0, -1.0}, 0.5), z), (std::vector<double>{2.0, -1.0}));
  for (double g : grad_input(MlpParams::zeros({2, 5, 1}), z)) EXPECT_EQ(g, 0.0);
}

TEST(GradInput, ReluKinkUsesZero) {
  MlpParams p = MlpParams::zeros({1, 1, 1}, Activation{ActivationKind::relu});
  p.weights[0] = {1.0};
  p.weights[1] = {1.0};
  const double z[1] = {0.0};
  EXPECT_EQ(grad_input(p, z)[0], 0.0);
}

class SmoothActivations : public ::testing::TestWithParam<ActivationKind> {};

TEST_P(SmoothActivations, FiniteDifferenceAgreement) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpParams p = random_net({3, 5, 4, 1}, GetParam(), 40 + trial);
    auto z = random_point(3, rng);
    const auto g = grad_input(p, z);
    const DualGradient dg = backprop(p, z, 1.0);
    const auto flat = p.flatten();
    const auto dflat = dg.d_params.flatten();
    const double h = 1e-5;
    for (std::size_t k = 0; k < z.size(); ++k) {
      auto zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (forward(p, zp) - forward(p, zm)) / (2 * h);
      EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      EXPECT_NEAR(dg.d_input[k], g[k], 1e-12);
    }
    MlpParams q = p;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      auto fp = flat, fm = flat;
      fp[k] += h;
      fm[k] -= h;
      q.assign_flat(fp);
      const double a = forward(q, z);
      q.assign_flat(fm);
      const double b = forward(q, z);
      const double fd = (a - b) / (2 * h);
      EXPECT_NEAR(dflat[k], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "param " << k;
    }
  }
}

TEST_P(SmoothActivations, InputPartialBackwardMatchesFiniteDifferences) {
  // d/dtheta of d f / d z_axis.
  std::mt19937_64 rng(5);
  const MlpParams p = random_net({2, 4, 3, 1}, GetParam(), 77);
  auto z = random_point(2, rng);
  const auto flat = p.flatten();
  for (int axis = 0; axis < 2; ++axis) {
    MlpEvaluator ev(p);
    ev.forward(z);
    std::vector<double> d(flat.size(), 0.0);
    ev.input_partial_backward(axis, 1.0, d);
    MlpParams q = p;
    const double h = 1e-5;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      auto fp = flat, fm = flat;
      fp[k] += h;
      fm[k] -= h;
      q.assign_flat(fp);
      const double a = grad_input(q, z)[axis];
      q.assign_flat(fm);
      const double b = grad_input(q, z)[axis];
      EXPECT_NEAR(d[k], (a - b) / (2 * h), 1e-6 * std::max(1.0, std::abs(d[k])));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, SmoothActivations,
                         ::testing::Values(ActivationKind::tanh, ActivationKind::softplus,
                                           ActivationKind::requ),
                         [](const auto& info) { return to_string(info.param); });

TEST(Backprop, SeedZeroAndAffine) {
  const double z[2] = {0.7, -1.1};
  const MlpParams p = random_net({2, 3, 1}, ActivationKind::tanh, 3);
  const DualGradient zero = backprop(p, z, 0.0);
  for (double v : zero.d_params.flatten()) EXPECT_EQ(v, 0.0);
  for (double v : zero.d_input) EXPECT_EQ(v, 0.0);

  const DualGradient a = backprop(affine({2.0, 3.0}, 1.0), z, 1.0);
  EXPECT_EQ(a.d_params.weights[0], (std::vector<double>{0.7, -1.1}));
  EXPECT_EQ(a.d_params.biases[0], (std::vector<double>{1.0}));
}

TEST(Lipschitz, Examples) {
  MlpParams one = MlpParams::zeros({1, 1});
  one.weights[0] = {3.0};
  EXPECT_EQ(lipschitz_bound(one, 0.25), 3.0);
  EXPECT_EQ(lipschitz_bound(one, 7.0), 3.0);

  MlpParams two = MlpParams::zeros({2, 2, 1});
  two.weights[0] = {1.5, -0.5, 1.0, 1.0};  // row sums 2, 2
  two.weights[1] = {-1.0, 1.0};           // row sum 2
  EXPECT_EQ(lipschitz_bound(two, 1.0), 4.0);
}

TEST(Lipschitz, BoundsSampledSlopes) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const MlpParams p = random_net({3, 6, 6, 1}, ActivationKind::tanh, 500 + trial);
    const double bound = lipschitz_bound(p, Activation{}.lipschitz_on(1.0));
    for (int k = 0; k < 1000; ++k) {
      const auto a = random_point(3, rng), b = random_point(3, rng);
      double dist = 0;
      for (int i = 0; i < 3; ++i) dist = std::max(dist, std::abs(a[i] - b[i]));
      EXPECT_LE(std::abs(forward(p, a) - forward(p, b)), bound * dist * (1 + 1e-12));
    }
  }
}

TEST(Activation, LipschitzConstants) {
  EXPECT_EQ(Activation{ActivationKind::tanh}.lipschitz_on(10), 1.0);
  EXPECT_EQ(Activation{ActivationKind::relu}.lipschitz_on(10), 1.0);
  EXPECT_EQ(Activation{ActivationKind::softplus}.lipschitz_on(10), 1.0);
  EXPECT_EQ(Activation{ActivationKind::leaky_relu}.lipschitz_on(10), 1.0);
  EXPECT_EQ(Activation{ActivationKind::requ}.lipschitz_on(3), 6.0);
  for (auto kind : {ActivationKind::tanh, ActivationKind::softplus, ActivationKind::relu,
                    ActivationKind::leaky_relu, ActivationKind::requ})
    for (double z : {-1e3, -1.0, 0.0, 2.0, 1e3}) EXPECT_TRUE(std::isfinite(Activation{kind}.value(z)));
  EXPECT_EQ(Activation{ActivationKind::relu}.derivative(0.0), 0.0);
  EXPECT_EQ(activation_from_string("leaky_relu"), ActivationKind::leaky_relu);
  EXPECT_THROW(activation_from_string("sigmoid"), InvalidArgument);
}

TEST(ParamNorm, Examples) {
  EXPECT_EQ(param_norm(MlpParams::zeros({2, 3, 1}), 2.0), 0.0);
  EXPECT_EQ(param_norm(affine({3.0}, 4.0), 2.0), 5.0);
  EXPECT_EQ(param_norm(affine({-7.0}, 2.0), std::numeric_limits<double>::infinity()), 7.0);
  EXPECT_EQ(param_norm(affine({-7.0}, 2.0), 1.0), 9.0);
}

TEST(Scaling, OutputLayerScalesOutput) {
  const MlpParams p = random_net({2, 4, 1}, ActivationKind::tanh, 12);
  MlpParams s = p;
  for (auto& w : s.weights.back()) w *= 3.0;
  for (auto& b : s.biases.back()) b *= 3.0;
  const double z[2] = {0.2, 0.9};
  EXPECT_NEAR(forward(s, z), 3.0 * forward(p, z), 1e-15);
}

TEST(Init, UniformRangeAndDeterminism) {
  const MlpParams a = init_mlp({4, 16, 1}, Activation{}, 9);
  const MlpParams b = init_mlp({4, 16, 1}, Activation{}, 9);
  EXPECT_EQ(a.flatten(), b.flatten());
  for (double w : a.weights[0]) EXPECT_LE(std::abs(w), 0.5);
  for (double w : a.weights[1]) EXPECT_LE(std::abs(w), 0.25);
  for (const auto& bias : a.biases)
    for (double v : bias) EXPECT_EQ(v, 0.0);
}

TEST(Grow, KeepsFunction) {
  const MlpParams p = random_net({2, 3, 3, 1}, ActivationKind::tanh, 2);
  const MlpParams g = grow_mlp(p, {7, 5}, 99);
  EXPECT_EQ(g.layer_sizes, (std::vector<int>{2, 7, 5, 1}));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto z = random_point(2, rng);
    EXPECT_NEAR(forward(g, z), forward(p, z), 1e-15);
  }
  EXPECT_THROW(grow_mlp(p, {2, 3}, 1), InvalidArgument);
}

TEST(MlpCsv, RoundTrip) {
  const MlpParams p = random_net({2, 3, 1}, ActivationKind::softplus, 6);
  std::stringstream header, csv;
  write_mlp_header(header, p);
  write_mlp_csv(csv, p);
  EXPECT_NE(csv.str().find("layer,row,col,value"), std::string::npos);
  EXPECT_NE(csv.str().find(",-1,"), std::string::npos);
  const MlpParams q = read_mlp(header, csv);
  EXPECT_EQ(q.layer_sizes, p.layer_sizes);
  EXPECT_EQ(q.flatten(), p.flatten());
  EXPECT_EQ(q.activation.kind, ActivationKind::softplus);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "smlpde/errors.hpp"
#include "smlpde/physics.hpp"

using namespace smlpde;

namespace {

Grid grid(int nx = 17, int nt = 9, double t_end = 1.0) { return Grid::make(1, nx, nt, 0.0, 1.0, t_end); }

SpatialField sfield(const Grid& g, double (*fn)(double)) {
  return SpatialField::from_function(g, [fn](std::span<const double> x) { return fn(x[0]); });
}

Field field(const Grid& g, double (*fn)(double, double)) {
  return Field::from_function(g, [fn](double t, std::span<const double> x) { return fn(t, x[0]); });
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Field f(g);
  for (auto& v : f.values) v = u(rng);
  return f;
}

SpatialField random_sfield(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  SpatialField f(g);
  for (auto& v : f.values) v = u(rng);
  return f;
}

}  // namespace

TEST(PhysicsKind, SlotsAndNames) {
  EXPECT_EQ(parameter_slots(PhysicsKind::none), 0);
  EXPECT_EQ(parameter_slots(PhysicsKind::convection), 1);
  EXPECT_EQ(parameter_slots(PhysicsKind::diffusion_reaction), 2);
  EXPECT_EQ(parameter_slots(PhysicsKind::burgers1d), 0);
  for (auto k : {PhysicsKind::none, PhysicsKind::convection, PhysicsKind::diffusion_reaction,
                 PhysicsKind::burgers1d})
    EXPECT_EQ(physics_from_string(to_string(k)), k);
  EXPECT_THROW(physics_from_string("advection"), InvalidArgument);
}

TEST(ApplyPhysics, Examples) {
  const Grid g = grid();
  const std::vector<SpatialField> two{SpatialField(g, 2.0)};
  for (double v : apply_physics(PhysicsKind::convection, Field(g, 5.0), two).values) EXPECT_NEAR(v, 0.0, 1e-12);
  const Field x = field(g, [](double, double x) { return x; });
  for (double v : apply_physics(PhysicsKind::convection, x, two).values) EXPECT_NEAR(v, 2.0, 1e-12);

  const std::vector<SpatialField> ac{SpatialField(g, 1.0), SpatialField(g, 0.0)};
  const Field x2 = field(g, [](double, double x) { return x * x; });
  for (double v : apply_physics(PhysicsKind::diffusion_reaction, x2, ac).values) EXPECT_NEAR(v, 2.0, 1e-9);
  for (double v : apply_physics(PhysicsKind::none, x2, {}).values) EXPECT_EQ(v, 0.0);
}

TEST(ApplyPhysics, DiffusionProductRule) {
  // a = 1 + x, c = 3, u = x^2: (a u_x)_x + c u = 2(1 + x) + 2x + 3x^2.
  const Grid g = grid(33);
  const std::vector<SpatialField> ac{sfield(g, [](double x) { return 1 + x; }), SpatialField(g, 3.0)};
  const Field u = field(g, [](double, double x) { return x * x; });
  const Field out = apply_physics(PhysicsKind::diffusion_reaction, u, ac);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    EXPECT_NEAR(out.at(0, i), 2 * (1 + x) + 2 * x + 3 * x * x, 1e-9);
  }
}

TEST(ApplyPhysics, BurgersAndZeroState) {
  const Grid g = grid();
  const Field x = field(g, [](double, double x) { return x; });
  const Field b = apply_physics(PhysicsKind::burgers1d, x, {});
  for (int i = 0; i < g.nx; ++i) EXPECT_NEAR(b.at(2, i), -g.x(i), 1e-12);
  std::mt19937_64 rng(1);
  const std::vector<SpatialField> phi{random_sfield(g, rng)};
  for (double v : apply_physics(PhysicsKind::convection, Field(g), phi).values) EXPECT_EQ(v, 0.0);
  for (double v : apply_physics(PhysicsKind::burgers1d, Field(g), {}).values) EXPECT_EQ(v, 0.0);
}

TEST(ApplyPhysics, ShapeErrors) {
  const Grid g = grid();
  EXPECT_THROW(apply_physics(PhysicsKind::convection, Field(g), {}), InvalidArgument);
  const Grid other = grid(9);
  const std::vector<SpatialField> wrong{SpatialField(other, 1.0)};
  EXPECT_THROW(apply_physics(PhysicsKind::convection, Field(g), wrong), InvalidArgument);
  const Grid g2 = Grid::make(2, 5, 3, 0, 1, 1);
  EXPECT_THROW(apply_physics(PhysicsKind::burgers1d, Field(g2), {}), Unsupported);
}

TEST(ApplyPhysics, LinearInState) {
  const Grid g = grid();
  std::mt19937_64 rng(2);
  for (auto kind : {PhysicsKind::convection, PhysicsKind::diffusion_reaction}) {
    std::vector<SpatialField> phi;
    for (int k = 0; k < parameter_slots(kind); ++k) phi.push_back(random_sfield(g, rng));
    const Field u = random_field(g, rng), v = random_field(g, rng);
    Field w(g);
    for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = 0.3 * u.values[i] - 1.7 * v.values[i];
    const Field fu = apply_physics(kind, u, phi), fv = apply_physics(kind, v, phi), fw = apply_physics(kind, w, phi);
    for (std::size_t i = 0; i < fw.values.size(); ++i) {
      const double want = 0.3 * fu.values[i] - 1.7 * fv.values[i];
      EXPECT_NEAR(fw.values[i], want, 1e-12 * std::max(1.0, std::abs(want)) * 1e3);
    }
  }
}

TEST(AffineCheck, Examples) {
  const Grid g = grid();
  std::mt19937_64 rng(3);
  const Field u = random_field(g, rng);
  const std::vector<SpatialField> p1{random_sfield(g, rng)}, p2{random_sfield(g, rng)};
  EXPECT_TRUE(affine_check(PhysicsKind::convection, u, p1, p2, 0.5));
  const std::vector<SpatialField> d1{random_sfield(g, rng), random_sfield(g, rng)};
  const std::vector<SpatialField> d2{random_sfield(g, rng), random_sfield(g, rng)};
  EXPECT_TRUE(affine_check(PhysicsKind::diffusion_reaction, u, d1, d2, 0.0));
  EXPECT_TRUE(affine_check(PhysicsKind::burgers1d, u, {}, {}, 0.3));
}

TEST(AffineCheck, RandomizedTrials) {
  const Grid g = grid();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(-2, 2);
  int passes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Field u = random_field(g, rng);
    const PhysicsKind kind = trial % 2 ? PhysicsKind::convection : PhysicsKind::diffusion_reaction;
    std::vector<SpatialField> p1, p2;
    for (int k = 0; k < parameter_slots(kind); ++k) {
      p1.push_back(random_sfield(g, rng));
      p2.push_back(random_sfield(g, rng));
    }
    passes += affine_check(kind, u, p1, p2, s(rng));
  }
  EXPECT_EQ(passes, 100);
}

TEST(PhysicsAdjoint, MatchesFiniteDifferences) {
  const Grid g = grid(9, 5);
  std::mt19937_64 rng(5);
  for (auto kind : {PhysicsKind::convection, PhysicsKind::diffusion_reaction, PhysicsKind::burgers1d}) {
    std::vector<SpatialField> phi;
    for (int k = 0; k < parameter_slots(kind); ++k) phi.push_back(random_sfield(g, rng));
    const Field u = random_field(g, rng), w = random_field(g, rng);
    auto objective = [&](const Field& uu, const std::vector<SpatialField>& pp) {
      const Field f = apply_physics(kind, uu, pp);
      double s = 0;
      for (std::size_t i = 0; i < f.values.size(); ++i) s += w.values[i] * f.values[i];
      return s;
    };
    std::vector<double> adj_u(g.size(), 0.0);
    std::vector<std::vector<double>> adj_phi(phi.size(), std::vector<double>(g.spatial_size(), 0.0));
    physics_adjoint(kind, u, phi, w.values, adj_u, adj_phi);
    const double h = 1e-6;
    for (std::size_t i = 0; i < u.values.size(); i += 4) {
      Field up = u, um = u;
      up.values[i] += h;
      um.values[i] -= h;
      EXPECT_NEAR(adj_u[i], (objective(up, phi) - objective(um, phi)) / (2 * h), 1e-6);
    }
    for (std::size_t k = 0; k < phi.size(); ++k)
      for (std::size_t s = 0; s < g.spatial_size(); ++s) {
        auto pp = phi, pm = phi;
        pp[k].values[s] += h;
        pm[k].values[s] -= h;
        EXPECT_NEAR(adj_phi[k][s], (objective(u, pp) - objective(u, pm)) / (2 * h), 1e-6);
      }
  }
}

TEST(NetworkInput, LayoutTimeThenJets) {
  const Grid g = grid(9, 5);
  const Field a = field(g, [](double t, double x) { return t + x * x; });
  const Field b = field(g, [](double, double x) { return 3 * x; });
  const std::vector<Field> states{a, b};
  const auto jets = state_jets(states, 1);
  ASSERT_EQ(network_input_size(1, 1, 2), 5u);
  std::vector<double> z(5);
  gather_network_input(jets, g, 2, 4, z);
  EXPECT_DOUBLE_EQ(z[0], g.t(2));
  EXPECT_DOUBLE_EQ(z[1], g.t(2) + 0.25);
  EXPECT_NEAR(z[2], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(z[3], 1.5);
  EXPECT_NEAR(z[4], 3.0, 1e-12);
}

TEST(Residual, Examples) {
  const Grid g = grid();
  // u = t, f = 1.
  MlpParams one = MlpParams::zeros({2, 3, 1});
  one.biases.back()[0] = 1.0;
  const std::vector<std::vector<SpatialField>> no_phi(1);
  const std::vector<Field> u{field(g, [](double t, double) { return t; })};
  const auto r1 = residual(u, no_phi, std::vector{one}, PhysicsKind::none, 0);
  for (double v : r1[0].values) EXPECT_NEAR(v, 0.0, 1e-12);
  // u = 0, f = 0 at the zero jet.
  const std::vector<Field> zero{Field(g)};
  const MlpParams z = MlpParams::zeros({2, 3, 1});
  const auto r2 = residual(zero, no_phi, std::vector{z}, PhysicsKind::none, 0);
  for (double v : r2[0].values) EXPECT_EQ(v, 0.0);
}

TEST(Residual, NetworkCountAndInputSize) {
  const Grid g = grid();
  const std::vector<Field> u{Field(g)};
  const std::vector<std::vector<SpatialField>> no_phi(1);
  EXPECT_THROW(residual(u, no_phi, std::vector<MlpParams>{}, PhysicsKind::none, 0), InvalidArgument);
  EXPECT_THROW(residual(u, {}, std::vector{MlpParams::zeros({2, 2, 1})}, PhysicsKind::none, 0), InvalidArgument);
  const MlpParams wrong = MlpParams::zeros({3, 2, 1});
  EXPECT_THROW(residual(u, no_phi, std::vector{wrong}, PhysicsKind::none, 0), InvalidArgument);
}

TEST(Residual, ManufacturedDecayConvergesAtSecondOrder) {
  // u = exp(-t) solves u' = -u; the network f(t, u) = -u is exact affine.
  MlpParams f = MlpParams::zeros({2, 1});
  f.weights[0] = {0.0, -1.0};
  double prev = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Grid g = grid(5, 9 << k);
    const std::vector<Field> u{field(g, [](double t, double) { return std::exp(-t); })};
    const std::vector<std::vector<SpatialField>> no_phi(1);
    const double err = sup_norm(residual(u, no_phi, std::vector{f}, PhysicsKind::none, 0)[0]);
    if (k > 0) EXPECT_GE(std::log2(prev / err), 1.8);
    prev = err;
  }
}

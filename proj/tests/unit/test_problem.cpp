#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fgpr/problem.hpp"

using namespace fgpr;

namespace {

constexpr double kPi = std::numbers::pi;

struct Bench {
  std::vector<double> points;
  std::vector<double> interior;
  FeSpace<double> space;
};

Bench bench(int m, int n_elements) {
  auto pts = chebyshev_points<double>(m);
  std::vector<double> interior(pts.begin() + 1, pts.end() - 1);
  auto space = assemble(build_mesh<double>(n_elements, interior));
  return Bench{std::move(pts), std::move(interior), std::move(space)};
}

}  // namespace

TEST(Chebyshev, Examples) {
  auto p4 = chebyshev_points<double>(4);
  ASSERT_EQ(p4.size(), 4u);
  EXPECT_EQ(p4[0], -1.0);
  EXPECT_NEAR(p4[1], -(std::sqrt(2.0) - 1.0), 1e-15);
  EXPECT_NEAR(p4[2], std::sqrt(2.0) - 1.0, 1e-15);
  EXPECT_EQ(p4[3], 1.0);
  EXPECT_EQ(chebyshev_points<double>(2), (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(chebyshev_points<double>(5)[2], 0.0);
  EXPECT_THROW(chebyshev_points<double>(1), InvalidInput);
}

TEST(Chebyshev, AntisymmetricAndIncreasing) {
  for (int m = 2; m <= 15; ++m) {
    auto p = chebyshev_points<double>(m);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_EQ(p[i], -p[p.size() - 1 - i]);
      if (i > 0) {
        EXPECT_GT(p[i], p[i - 1]);
      }
    }
  }
}

TEST(TrueState, Values) {
  EXPECT_EQ(true_state(1.0), 0.0);
  EXPECT_EQ(true_state(-1.0), 0.0);
  EXPECT_NEAR(true_state(0.5), 0.1013212, 1e-7);
  EXPECT_NEAR(true_state(0.25), 0.0716449, 1e-7);
  // -u'' = f_true by central differences
  for (double x : {-0.7, 0.1, 0.33}) {
    const double h = 1e-4;
    const double upp = (true_state(x + h) - 2 * true_state(x) + true_state(x - h)) / (h * h);
    EXPECT_NEAR(-upp, true_source(x), 1e-5);
  }
}

TEST(SolveBk, AnalyticBestKnowledgeState) {
  const std::vector<double> pts{0.125};
  auto space = assemble(build_mesh<double>(2000, pts));
  auto model = make_bk_model(space, interpolate(space, [](double x) { return bk_source(x); }), 0.0, 0.0);
  auto bk = solve_bk(model, std::span<const double>(pts));
  EXPECT_NEAR(bk.outputs(0), 1.0 / (4 * kPi * kPi), 1e-5);
}

TEST(SolveBk, ZeroSourceAndTrueSource) {
  auto b = bench(8, 400);
  auto zero = make_bk_model(b.space, Vector<double>::Zero(b.space.n_dof()), 0.0, 0.0);
  auto z = solve_bk(zero, std::span<const double>(b.interior));
  EXPECT_EQ(z.outputs, Vector<double>::Zero(6));
  EXPECT_EQ(z.u.coeffs, Vector<double>::Zero(b.space.n_dof()));

  auto truth = make_bk_model(b.space, interpolate(b.space, [](double x) { return true_source(x); }), 0.0, 0.0);
  auto t = solve_bk(truth, std::span<const double>(b.interior));
  for (std::size_t i = 0; i < b.interior.size(); ++i)
    EXPECT_NEAR(t.outputs(static_cast<Index>(i)), true_state(b.interior[i]), 1e-4);
}

TEST(SolveBk, BoundaryConsistency) {
  auto b = bench(6, 50);
  auto model = make_bk_model(b.space, interpolate(b.space, [](double x) { return bk_source(x); }), 0.3, -0.2);
  auto bk = solve_bk(model, std::span<const double>(b.points));
  EXPECT_EQ(bk.outputs(0), 0.3);
  EXPECT_EQ(bk.outputs(5), -0.2);
}

TEST(SolveBk, RejectsPointsOffMesh) {
  auto b = bench(4, 10);
  auto model = make_bk_model(b.space, Vector<double>::Zero(b.space.n_dof()), 0.0, 0.0);
  const std::vector<double> off{0.123456};
  EXPECT_THROW(solve_bk(model, std::span<const double>(off)), InvalidInput);
}

TEST(Adjoints, GreensFunctionValues) {
  const std::vector<double> pts{0.0, 0.5};
  auto space = assemble(build_mesh<double>(16, pts));
  auto adj = solve_adjoints(space, std::span<const double>(pts));
  ASSERT_EQ(adj.size(), 2);
  EXPECT_NEAR(adj.coeffs(*space.mesh().node_index(0.0), 0), -0.5, 1e-13);
  EXPECT_NEAR(adj.coeffs(*space.mesh().node_index(0.5), 1), -0.375, 1e-13);
  for (Index i = 0; i < 2; ++i) {
    EXPECT_EQ(adj.coeffs(0, i), 0.0);
    EXPECT_EQ(adj.coeffs(space.n_dof() - 1, i), 0.0);
  }
  // linear Green's function is exact at every node
  for (Index k = 0; k < space.n_dof(); ++k) {
    const double x = space.mesh()[k];
    const double g = x <= 0.0 ? -(1 + x) * (1 - 0.0) / 2 : -(1 + 0.0) * (1 - x) / 2;
    EXPECT_NEAR(adj.coeffs(k, 0), g, 1e-13);
  }
}

TEST(Adjoints, IdentityWithRandomFunctional) {
  auto b = bench(10, 64);
  auto model = make_bk_model(b.space, interpolate(b.space, [](double x) { return bk_source(x); }), 0.0, 0.0);
  auto bk = solve_bk(model, std::span<const double>(b.interior));
  auto adj = solve_adjoints(b.space, std::span<const double>(b.interior));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 1);
  Vector<double> g = Vector<double>::Zero(b.space.n_dof());
  for (Index i = 1; i + 1 < g.size(); ++i) g(i) = n(rng);
  auto u_star = solve_dirichlet(b.space, Vector<double>(model.load - g), 0.0, 0.0);
  for (Index i = 0; i < adj.size(); ++i) {
    const double lhs = g.dot(adj.coeffs.col(i));
    const double rhs = u_star.coeffs(adj.nodes[static_cast<std::size_t>(i)]) - bk.outputs(i);
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(std::abs(rhs), 1e-300));
  }
}

TEST(Adjoints, RejectBoundaryPoint) {
  auto b = bench(4, 10);
  const std::vector<double> edge{-1.0};
  EXPECT_THROW(solve_adjoints(b.space, std::span<const double>(edge)), InvalidInput);
}

TEST(Observations, NoiseFreeValues) {
  const std::vector<double> pts{-1.0, 0.5, 1.0};
  auto obs = synthesize_observations<double>(pts, 0.0, 0);
  EXPECT_EQ(obs.data(0), 0.0);
  EXPECT_NEAR(obs.data(1), 1.0 / (kPi * kPi), 1e-15);
  EXPECT_EQ(obs.data(2), 0.0);
}

TEST(Observations, DeterministicWithSeed) {
  auto pts = chebyshev_points<double>(9);
  auto a = synthesize_observations<double>(pts, 1e-2, 42);
  auto b = synthesize_observations<double>(pts, 1e-2, 42);
  auto c = synthesize_observations<double>(pts, 1e-2, 43);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
}

TEST(Observations, AntisymmetricWithoutNoise) {
  for (int m : {4, 7, 12}) {
    auto pts = chebyshev_points<double>(m);
    auto obs = synthesize_observations<double>(pts, 0.0, 0);
    EXPECT_EQ(Vector<double>(obs.data.reverse()), Vector<double>(-obs.data));
  }
}

TEST(Observations, RejectsBadInput) {
  const std::vector<double> unsorted{-1.0, 0.2, 0.1, 1.0};
  EXPECT_THROW(synthesize_observations<double>(unsorted, 0.0, 0), InvalidInput);
  const std::vector<double> ok{-1.0, 1.0};
  EXPECT_THROW(synthesize_observations<double>(ok, -1.0, 0), InvalidInput);
}

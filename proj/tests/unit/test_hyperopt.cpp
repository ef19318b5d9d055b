#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fgpr/hyperopt.hpp"

using namespace fgpr;

namespace {

const double kLog2Pi = std::log(2 * std::numbers::pi);

LmlProblem<double> scaled_identity(Vector<double> y) {
  LmlProblem<double> p;
  p.kind = LmlKind::Standard;
  p.residual = std::move(y);
  p.bounds = {{1e-6, 1e3}};
  const Index n = p.residual.size();
  p.builder = [n](const Vector<double>& t) { return Matrix<double>(t(0) * Matrix<double>::Identity(n, n)); };
  return p;
}

}  // namespace

TEST(Lml, UnitValues) {
  Matrix<double> one = Matrix<double>::Identity(1, 1);
  EXPECT_NEAR(log_marginal_likelihood(one, Vector<double>::Zero(1)), -0.9189385332046727, 1e-12);
  EXPECT_NEAR(log_marginal_likelihood(one, Vector<double>::Ones(1)), -1.4189385332046727, 1e-12);
  Matrix<double> two = 2 * Matrix<double>::Identity(2, 2);
  EXPECT_NEAR(log_marginal_likelihood(two, Vector<double>::Zero(2)), -std::log(2.0) - kLog2Pi, 1e-12);
}

TEST(Lml, LogDetMatchesDeterminant) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix<double> b(5, 5);
    for (Index i = 0; i < 25; ++i) b(i) = n(rng);
    Matrix<double> a = b * b.transpose() + 0.1 * Matrix<double>::Identity(5, 5);
    Eigen::LLT<Matrix<double>> llt(a);
    const double direct = std::log(a.determinant());
    EXPECT_LE(std::abs(log_det(llt) - direct), 1e-10 * std::abs(direct));
  }
}

TEST(Lml, InfeasibleIsMinusInfinity) {
  Matrix<double> neg = -Matrix<double>::Identity(2, 2);
  EXPECT_EQ(log_marginal_likelihood(neg, Vector<double>::Ones(2)), -std::numeric_limits<double>::infinity());
  auto p = scaled_identity(Vector<double>::Ones(3));
  Vector<double> out(1);
  out << 2e3;
  EXPECT_EQ(log_marginal_likelihood(p, out), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(log_marginal_likelihood(p, Vector<double>::Ones(2)), InvalidInput);
}

TEST(Optimize, ScaledIdentityMaximizer) {
  Vector<double> y(4);
  y << 0.3, -1.2, 0.8, 2.0;
  auto res = optimize(scaled_identity(y));
  const double expect = y.squaredNorm() / 4.0;
  EXPECT_NEAR(res.theta_star(0), expect, 1e-5 * expect);
  EXPECT_EQ(res.trace.size(), static_cast<std::size_t>(res.n_evals));
}

TEST(Optimize, DeterministicTrace) {
  Vector<double> y(3);
  y << 0.1, 0.5, -0.2;
  auto a = optimize(scaled_identity(y));
  auto b = optimize(scaled_identity(y));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].first, b.trace[i].first);
    EXPECT_EQ(a.trace[i].second, b.trace[i].second);
  }
}

TEST(Optimize, LandsOnZeroBound) {
  // Residual along Phi^T M Phi only: theta2 should stay at exactly zero.
  auto pts = chebyshev_points<double>(9);
  std::vector<double> interior(pts.begin() + 1, pts.end() - 1);
  auto space = assemble(build_mesh<double>(200, interior));
  auto adj = solve_adjoints(space, std::span<const double>(interior));
  auto [km, ka] = gram_components(adj);
  Eigen::LLT<Matrix<double>> llt(km);
  Vector<double> z = Vector<double>::LinSpaced(7, -1.0, 1.0);
  Vector<double> y = llt.matrixL() * z;
  y *= std::sqrt(0.2);
  auto res = optimize(functional_lml_problem(adj, y, 0.0));
  EXPECT_EQ(res.theta_star(1), 0.0);
  EXPECT_GT(res.theta_star(0), 0.0);
}

TEST(Optimize, FunctionalGridIncludesZero) {
  auto pts = chebyshev_points<double>(6);
  std::vector<double> interior(pts.begin() + 1, pts.end() - 1);
  auto space = assemble(build_mesh<double>(40, interior));
  auto adj = solve_adjoints(space, std::span<const double>(interior));
  OptimizerSettings s;
  s.max_evals = 0;
  auto res = optimize(functional_lml_problem(adj, Vector<double>::Ones(4), 0.0), s);
  // (0, 0) is infeasible and is the very first grid point
  EXPECT_EQ(res.trace.front().first, Vector<double>::Zero(2));
  EXPECT_EQ(res.trace.front().second, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(res.trace[1].first(1), 1e-6);
}

TEST(Optimize, RejectsBadSetup) {
  LmlProblem<double> p;
  EXPECT_THROW(optimize(p), InvalidInput);
  auto q = scaled_identity(Vector<double>::Ones(2));
  q.bounds = {{-1.0, 1.0}};
  EXPECT_THROW(optimize(q), InvalidInput);
  auto r = scaled_identity(Vector<double>::Ones(2));
  r.builder = [](const Vector<double>&) -> Matrix<double> { throw InvalidInput("nope"); };
  EXPECT_THROW(optimize(r), OptimizationFailure);
}

TEST(Optimize, StandardLmlProblemCentresData) {
  std::vector<double> x{-1.0, 0.0, 1.0};
  Vector<double> y(3);
  y << 1.0, 2.0, 3.0;
  auto p = standard_lml_problem(x, y, 0.0);
  EXPECT_NEAR(p.residual.sum(), 0.0, 1e-15);
  EXPECT_EQ(p.bounds.front().lo, 1e-6);
}

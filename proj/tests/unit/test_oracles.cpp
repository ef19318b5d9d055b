#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "fgpr/fgp.hpp"
#include "fgpr/hyperopt.hpp"
#include "fgpr/oracles.hpp"
#include "fgpr/verify.hpp"

using namespace fgpr;

namespace {

struct Case {
  std::vector<double> interior;
  Vector<double> data;  // interior
  FeSpace<double> space;
  BkModel<double> model;
  Vector<double> s;
  AdjointSet<double> adjoints;
};

Case make_case(int m, int n_elements, double sigma = 0.0) {
  auto pts = chebyshev_points<double>(m);
  auto obs = synthesize_observations<double>(pts, sigma, 0);
  std::vector<double> interior(pts.begin() + 1, pts.end() - 1);
  auto space = assemble(build_mesh<double>(n_elements, interior));
  auto model = make_bk_model(space, interpolate(space, [](double x) { return bk_source(x); }), obs.data(0),
                             obs.data(m - 1));
  auto bk = solve_bk(model, std::span<const double>(interior));
  auto adj = solve_adjoints(space, std::span<const double>(interior));
  return Case{interior, obs.data.segment(1, m - 2), space, model, bk.outputs, adj};
}

}  // namespace

TEST(EigenBasis, MassOperatorHasUnitSpectrum) {
  auto s = assemble(build_mesh<double>(20, {}));
  auto b = eigenbasis(CovOperator<double>(s, 1.0, 0.0), s.n_interior());
  EXPECT_LE((b.lambdas.array() - 1.0).abs().maxCoeff(), 1e-12);
  const Matrix<double> gram = b.psis.transpose() * s.mass() * b.psis;
  EXPECT_LE((gram - Matrix<double>::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EigenBasis, LaplaceLowestMode) {
  auto s = assemble(build_mesh<double>(256, {}));
  const Index ni = s.n_interior();
  auto b = eigenbasis(CovOperator<double>(s, 0.0, 1.0), ni);
  const double pi = std::numbers::pi;
  EXPECT_NEAR(b.lambdas(ni - 1), pi * pi / 4, 0.01 * pi * pi / 4);
  EXPECT_NEAR(b.lambdas(ni - 2), pi * pi, 0.01 * pi * pi);
  for (Index j = 1; j < ni; ++j) EXPECT_GE(b.lambdas(j - 1), b.lambdas(j));
}

TEST(EigenBasis, AffineSpectrum) {
  auto s = assemble(build_mesh<double>(30, {}));
  const Index ni = s.n_interior();
  auto lap = eigenbasis(CovOperator<double>(s, 0.0, 1.0), ni);
  auto mix = eigenbasis(CovOperator<double>(s, 0.7, 0.2), ni);
  EXPECT_LE((mix.lambdas - (0.7 + 0.2 * lap.lambdas.array()).matrix()).cwiseAbs().maxCoeff(),
            1e-10 * mix.lambdas.maxCoeff());
  EXPECT_THROW(eigenbasis(CovOperator<double>(s, 1.0, 0.0), ni + 1), InvalidInput);
}

TEST(WeightSpace, ZeroResidualZeroMean) {
  auto c = make_case(6, 32);
  const CovOperator<double> op(c.space, 0.5, 0.1);
  auto b = eigenbasis(op, c.space.n_interior());
  const Matrix<double> tests = Matrix<double>::Identity(c.space.n_dof(), c.space.n_dof());
  auto p = weight_space_predict(b, c.adjoints, Vector<double>::Zero(4), 0.0, tests);
  EXPECT_EQ(p.means, Vector<double>::Zero(c.space.n_dof()));
}

TEST(WeightSpace, KernelTrickEquivalence) {
  for (double sigma : {0.0, 1e-3}) {
    auto r = check_kernel_trick(32, 6, sigma);
    EXPECT_LE(r.mean_rel_err, 1e-8) << "sigma=" << sigma;
    EXPECT_LE(r.var_rel_err, 1e-8) << "sigma=" << sigma;
    EXPECT_LE(r.truncated_excess, 1e-10) << "sigma=" << sigma;
  }
}

TEST(Kkt, DataEqualsBestKnowledge) {
  auto c = make_case(8, 64);
  const CovOperator<double> op(c.space, 0.3, 0.0);
  auto k = kkt_solve(c.model, op, c.adjoints, c.s, 0.0);
  auto bk = solve_bk(c.model, std::span<const double>(c.interior));
  EXPECT_LE((k.u.coeffs - bk.u.coeffs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(k.q.coeffs.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(k.beta.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Kkt, MatchesFunctionalPosterior) {
  for (int m : {4, 8, 12}) {
    for (double sigma : {0.0, 1e-3}) {
      auto r = check_kkt(m, sigma);
      EXPECT_LE(r.mean_l2_diff, 1e-9) << "M=" << m << " sigma=" << sigma;
      EXPECT_LE(r.beta_rel_diff, 1e-9) << "M=" << m << " sigma=" << sigma;
      EXPECT_LE(r.max_stationarity, 1e-8) << "M=" << m << " sigma=" << sigma;
    }
  }
}

TEST(Kkt, HardConstraintsWithoutNoise) {
  auto c = make_case(8, 64);
  const CovOperator<double> op(c.space, 0.3, 0.02);
  auto k = kkt_solve(c.model, op, c.adjoints, c.data, 0.0);
  for (Index i = 0; i < c.adjoints.size(); ++i)
    EXPECT_NEAR(k.u.coeffs(c.adjoints.nodes[static_cast<std::size_t>(i)]), c.data(i), 1e-12);
  // q = sum beta_i phi_i
  EXPECT_LE((k.q.coeffs - c.adjoints.coeffs * k.beta).cwiseAbs().maxCoeff(), 1e-9 * k.q.coeffs.cwiseAbs().maxCoeff());
}

TEST(Kkt, ObjectiveIsMinimalOnFeasibleDirections) {
  for (double sigma : {0.0, 1e-3}) {
    auto c = make_case(8, 64, sigma);
    const CovOperator<double> op(c.space, 0.2, 0.01);
    auto k = kkt_solve(c.model, op, c.adjoints, c.data, sigma);
    const Index ni = c.space.n_interior(), m = c.adjoints.size();
    const Matrix<double> kii = c.space.interior_block(op.matrix());
    // c_i(A^{-1} K dq): a direction dq changes u by -A^{-1} K dq
    Matrix<double> sel = Matrix<double>::Zero(m, ni);
    for (Index i = 0; i < m; ++i) sel(i, c.adjoints.nodes[static_cast<std::size_t>(i)] - 1) = 1.0;
    const Matrix<double> jac = sel * c.space.solve_interior(kii);
    const Eigen::LLT<Matrix<double>> jj(jac * jac.transpose());

    const Vector<double> gamma = k.beta;
    const double f0 = kkt_objective(op, k.q.coeffs, gamma, sigma);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      Vector<double> dq(ni);
      for (Index i = 0; i < ni; ++i) dq(i) = normal(rng);
      Vector<double> dgamma = Vector<double>::Zero(m);
      if (sigma > 0 && trial % 2 == 1) {
        dgamma = jac * dq / (sigma * sigma);  // c(du) + sigma^2 dgamma = 0 with du = -A^{-1} K dq
      } else {
        dq -= jac.transpose() * jj.solve(jac * dq);
      }
      const double scale = 1e-3 / std::sqrt(dq.squaredNorm() + dgamma.squaredNorm());
      Vector<double> q = k.q.coeffs;
      q.segment(1, ni) += scale * dq;
      const double f1 = kkt_objective(op, q, Vector<double>(gamma + scale * dgamma), sigma);
      EXPECT_GE(f1, f0 - 1e-14 * std::abs(f0)) << "sigma=" << sigma << " trial=" << trial;
    }
  }
}

TEST(AdjointIdentity, RandomFunctional) { EXPECT_LE(check_adjoint_identity().rel_err, 1e-10); }

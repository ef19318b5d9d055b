#pragma once

// Independent reference routes for the functional GP, used for verification only.
//
//  * Weight-space Bayesian regression in the eigenbasis of the covariance
//    operator, k(psi_n, v) = Lambda_n m(psi_n, v). With the full basis it
//    reproduces the kernel-form predictive distribution.
//  * The constrained least-squares problem
//        min 1/2 k(q, q) + 1/2 sigma^2 |gamma|^2
//        s.t. a(z, v) + k(q, v) = l(v),  c_i(z) + sigma^2 gamma_i = d_i,
//    whose minimizer is the posterior mean state.
//
// Both are dense O(J^3) and meant for coarse meshes.

#include <array>
#include <cmath>
#include <limits>

#include "fgpr/covariance.hpp"
#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/problem.hpp"

namespace fgpr {

template <typename Scalar>
struct EigenBasis {
  FeSpace<Scalar> space;
  Matrix<Scalar> psis;     // n_dof x n_modes; zero boundary rows, psis^T Mmat psis = I
  Vector<Scalar> lambdas;  // descending

  Index size() const { return lambdas.size(); }
  Field<Scalar> psi(Index n) const { return Field<Scalar>(space, psis.col(n)); }
};

/// Generalized eigenproblem K_II psi = Lambda Mmat_II psi on the homogeneous-Dirichlet
/// subspace, reduced through the Cholesky factor of Mmat_II. Keeps the top `n_modes`.
template <typename Scalar>
EigenBasis<Scalar> eigenbasis(const CovOperator<Scalar>& op, Index n_modes) {
  const auto& space = op.space();
  const Index ni = space.n_interior();
  if (n_modes < 1 || n_modes > ni) throw InvalidInput("eigenbasis: n_modes must be in [1, interior dofs]");
  const Matrix<Scalar> k = space.interior_block(op.matrix());
  const Matrix<Scalar> m = space.interior_block(space.mass());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<Scalar>> es(k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenbasis: generalized eigensolve failed");

  EigenBasis<Scalar> basis{space, Matrix<Scalar>::Zero(space.n_dof(), n_modes), Vector<Scalar>(n_modes)};
  for (Index j = 0; j < n_modes; ++j) {
    const Index src = ni - 1 - j;  // eigenvalues come back ascending
    basis.lambdas(j) = es.eigenvalues()(src);
    basis.psis.col(j).segment(1, ni) = es.eigenvectors().col(src);
  }
  return basis;
}

template <typename Scalar>
struct WeightSpacePrediction {
  Vector<Scalar> means;
  Vector<Scalar> variances;
};

/// Predictive mean and variance of g(phi*) for each column of `test_fields`
/// (n_dof x n_test coefficient vectors), from the reduced M' x M' system
/// (sigma^2 I + L^T Lambda L).
template <typename Scalar>
WeightSpacePrediction<Scalar> weight_space_predict(const EigenBasis<Scalar>& basis, const AdjointSet<Scalar>& adjoints,
                                                   const NoDeduce<Vector<Scalar>>& residual, NoDeduce<Scalar> sigma,
                                                   const NoDeduce<Matrix<Scalar>>& test_fields) {
  if (!adjoints.space.same_as(basis.space)) throw InvalidInput("weight_space_predict: mismatched spaces");
  if (residual.size() != adjoints.size()) throw InvalidInput("weight_space_predict: residual length != M'");
  if (test_fields.rows() != basis.space.n_dof()) throw InvalidInput("weight_space_predict: bad test fields");

  const Matrix<Scalar> m_psi = basis.space.mass() * basis.psis;  // l_i(v) = m(psi_i, v)
  const Matrix<Scalar> l_train = m_psi.transpose() * adjoints.coeffs;
  const Matrix<Scalar> l_test = m_psi.transpose() * test_fields;
  const auto lambda = basis.lambdas.asDiagonal();

  Matrix<Scalar> s = symmetrized(l_train.transpose() * lambda * l_train);
  s.diagonal().array() += sigma * sigma;
  auto chol = jittered_cholesky(s, "sigma^2 I + L^T Lambda L");

  const Matrix<Scalar> lam_test = lambda * l_test;
  const Matrix<Scalar> cross = l_train.transpose() * lam_test;  // M' x n_test
  WeightSpacePrediction<Scalar> out;
  out.means = cross.transpose() * chol.llt.solve(residual);
  const Matrix<Scalar> w = chol.llt.matrixL().solve(cross);
  out.variances = (l_test.cwiseProduct(lam_test)).colwise().sum().transpose() - w.colwise().squaredNorm().transpose();
  return out;
}

template <typename Scalar>
struct KktSolution {
  Field<Scalar> u;
  Field<Scalar> q;
  Vector<Scalar> beta;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> selection_matrix(const AdjointSet<Scalar>& adjoints) {
  Matrix<Scalar> c = Matrix<Scalar>::Zero(adjoints.size(), adjoints.space.n_interior());
  for (Index i = 0; i < adjoints.size(); ++i) c(i, adjoints.nodes[static_cast<std::size_t>(i)] - 1) = Scalar(1);
  return c;
}

template <typename Scalar>
Vector<Scalar> lifted_load(const BkModel<Scalar>& model) {
  const auto& a = model.space.stiffness();
  const Index n = model.space.n_dof();
  const Index ni = model.space.n_interior();
  return model.load.segment(1, ni) - a.block(1, 0, ni, 1).col(0) * model.b_left -
         a.block(1, n - 1, ni, 1).col(0) * model.b_right;
}

}  // namespace detail

/// Solves the stationarity system after eliminating p = q and rho = beta.
/// Unknowns (q_I, beta, u_I); the block matrix
///   [ K_II   0       A_II ]
///   [ 0      s^2 I   C    ]
///   [ A_II   C^T     0    ]
/// is symmetric indefinite and is factored with partial-pivot LU.
template <typename Scalar>
KktSolution<Scalar> kkt_solve(const BkModel<Scalar>& model, const CovOperator<Scalar>& op,
                              const AdjointSet<Scalar>& adjoints, const NoDeduce<Vector<Scalar>>& data,
                              NoDeduce<Scalar> sigma) {
  const auto& space = model.space;
  if (!op.space().same_as(space) || !adjoints.space.same_as(space)) throw InvalidInput("kkt_solve: mismatched spaces");
  const Index ni = space.n_interior();
  const Index m = adjoints.size();
  if (data.size() != m) throw InvalidInput("kkt_solve: data length != number of observation functionals");

  const Matrix<Scalar> c = detail::selection_matrix(adjoints);
  const Index nt = 2 * ni + m;
  Matrix<Scalar> sys = Matrix<Scalar>::Zero(nt, nt);
  sys.block(0, 0, ni, ni) = space.interior_block(op.matrix());
  sys.block(0, ni + m, ni, ni) = space.interior_block(space.stiffness());
  sys.block(ni, ni, m, m).diagonal().setConstant(sigma * sigma);
  sys.block(ni, ni + m, m, ni) = c;
  sys.block(ni + m, 0, ni, ni) = space.interior_block(space.stiffness());
  sys.block(ni + m, ni, ni, m) = c.transpose();

  Vector<Scalar> rhs = Vector<Scalar>::Zero(nt);
  rhs.segment(0, ni) = detail::lifted_load(model);
  rhs.segment(ni, m) = data;

  Eigen::PartialPivLU<Matrix<Scalar>> lu(sys);
  const Vector<Scalar> x = lu.solve(rhs);
  const Scalar rel = (sys * x - rhs).norm() / std::max(rhs.norm(), std::numeric_limits<Scalar>::min());
  if (!x.allFinite() || !(rel < Scalar(1e-6))) throw NumericalFailure("kkt_solve: saddle-point system is singular");

  const Index n = space.n_dof();
  Vector<Scalar> q = Vector<Scalar>::Zero(n);
  q.segment(1, ni) = x.segment(0, ni);
  Vector<Scalar> u(n);
  u(0) = model.b_left;
  u(n - 1) = model.b_right;
  u.segment(1, ni) = x.segment(ni + m, ni);
  return KktSolution<Scalar>{Field<Scalar>(space, std::move(u)), Field<Scalar>(space, std::move(q)),
                             x.segment(ni, m)};
}

/// Relative residuals of the five stationarity conditions, with the
/// multipliers reconstructed as p = sum beta_i phi_i and rho = beta:
///   [0] k(q - p, v)            [1] a(v, p) + sum rho_i c_i(v)
///   [2] sigma^2 (beta - rho)   [3] a(u, v) + k(q, v) - l(v)
///   [4] c_i(u) + sigma^2 beta_i - d_i
template <typename Scalar>
std::array<Scalar, 5> kkt_residuals(const BkModel<Scalar>& model, const CovOperator<Scalar>& op,
                                    const AdjointSet<Scalar>& adjoints, const NoDeduce<Vector<Scalar>>& data, NoDeduce<Scalar> sigma,
                                    const KktSolution<Scalar>& sol) {
  const auto& space = model.space;
  const Index ni = space.n_interior();
  const Matrix<Scalar> k = space.interior_block(op.matrix());
  const Matrix<Scalar> a = space.interior_block(space.stiffness());
  const Matrix<Scalar> c = detail::selection_matrix(adjoints);
  const Vector<Scalar> q = sol.q.coeffs.segment(1, ni);
  const Vector<Scalar> u = sol.u.coeffs.segment(1, ni);
  const Vector<Scalar> p = (adjoints.coeffs * sol.beta).segment(1, ni);
  const Vector<Scalar> rho = sol.beta;
  const Scalar s2 = sigma * sigma;
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  auto rel = [tiny](Scalar num, Scalar den) { return num / std::max(den, tiny); };

  const Vector<Scalar> lifted = detail::lifted_load(model);
  const Vector<Scalar> kq = k * q;
  const Vector<Scalar> au = a * u;
  const Vector<Scalar> cu = c * u;
  return {rel((kq - k * p).norm(), kq.norm()),
          rel((a * p + c.transpose() * rho).norm(), (c.transpose() * rho).norm()),
          rel((s2 * (sol.beta - rho)).norm(), std::max(s2 * sol.beta.norm(), Scalar(1))),
          rel((au + kq - lifted).norm(), lifted.norm() + au.norm()),
          rel((cu + s2 * sol.beta - data).norm(), data.norm() + cu.norm())};
}

/// 1/2 k(q, q) + 1/2 sigma^2 |gamma|^2.
template <typename Scalar>
Scalar kkt_objective(const CovOperator<Scalar>& op, const NoDeduce<Vector<Scalar>>& q,
                     const NoDeduce<Vector<Scalar>>& gamma, NoDeduce<Scalar> sigma) {
  return Scalar(0.5) * q.dot(op.matrix() * q) + Scalar(0.5) * sigma * sigma * gamma.squaredNorm();
}

}  // namespace fgpr

#pragma once

// Functional GP regression: the residuals d - s are noisy observations of a
// Gaussian functional g at the adjoint states, g ~ FGP(0, k). The posterior of
// g on the FE basis is pushed through the best-knowledge operator to give the
// posterior of the state.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fgpr/covariance.hpp"
#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/problem.hpp"

namespace fgpr {

template <typename Scalar>
struct FgpFit {
  Vector<Scalar> beta;
  Matrix<Scalar> d;                   // K(Phi, Phi) + sigma^2 I
  Eigen::LLT<Matrix<Scalar>> chol_d;  // factor of d + jitter I
  Scalar jitter = Scalar(0);
  Scalar sigma = Scalar(0);
  Vector<Scalar> residual;
};

template <typename Scalar>
FgpFit<Scalar> fit(const CovOperator<Scalar>& op, const AdjointSet<Scalar>& adjoints,
                   const NoDeduce<Vector<Scalar>>& residual, NoDeduce<Scalar> sigma) {
  if (residual.size() != adjoints.size())
    throw InvalidInput("fit: residual length != number of adjoints");
  if (!(sigma >= Scalar(0))) throw InvalidInput("fit: sigma must be >= 0");
  if (!adjoints.space.same_as(op.space())) throw InvalidInput("fit: adjoints on a different space");

  FgpFit<Scalar> f;
  f.sigma = sigma;
  f.residual = residual;
  const Matrix<Scalar>& phi = adjoints.coeffs;
  f.d = symmetrized(phi.transpose() * (op.matrix() * phi));
  f.d.diagonal().array() += sigma * sigma;
  auto chol = try_jittered_cholesky(f.d);
  if (!chol) {
    throw NumericalFailure("fit: D = K(Phi,Phi) + sigma^2 I is not positive definite after jitter (theta = (" +
                           std::to_string(static_cast<double>(op.theta1())) + ", " +
                           std::to_string(static_cast<double>(op.theta2())) +
                           "), M' = " + std::to_string(adjoints.size()) + ")");
  }
  f.chol_d = std::move(chol->llt);
  f.jitter = chol->jitter;
  f.beta = f.chol_d.solve(residual);
  return f;
}

/// Posterior of g on the FE basis: g* ~ N(gbar, cov_g).
template <typename Scalar>
struct FunctionalPosterior {
  Vector<Scalar> gbar;   // n_dof
  Matrix<Scalar> cov_g;  // n_dof x n_dof
  /// F with F F^T = cov_g restricted to interior dofs.
  Matrix<Scalar> interior_factor;
};

namespace detail {

// With K_II = G G^T and B = G^T Phi_I, the interior block of cov_g is
// G (I - Q Q^T) G^T where Q = B R^{-1} is the top block of the thin QR of
// [B; s I], s^2 = sigma^2 + jitter. Writing Q = W diag(q) X^T,
// I - Q Q^T = C C^T with C = I - W diag(1 - sqrt(1 - q^2)) W^T.
// At sigma = 0 this is an exact orthogonal projector, so the variance along
// observed functionals vanishes to rounding instead of sqrt(rounding).
template <typename Scalar>
Matrix<Scalar> interior_posterior_factor(const Matrix<Scalar>& k_interior, const Matrix<Scalar>& phi_interior,
                                         NoDeduce<Scalar> noise_var) {
  const Index ni = k_interior.rows();
  const Index m = phi_interior.cols();
  Eigen::LLT<Matrix<Scalar>> k_llt(k_interior);
  if (k_llt.info() != Eigen::Success)
    throw NumericalFailure("covariance operator is not positive definite on interior dofs");
  Matrix<Scalar> g = k_llt.matrixL();
  if (m == 0) return g;

  Matrix<Scalar> aug = Matrix<Scalar>::Zero(ni + m, m);
  aug.topRows(ni) = g.transpose() * phi_interior;
  aug.bottomRows(m).diagonal().setConstant(std::sqrt(std::max(noise_var, Scalar(0))));
  Eigen::HouseholderQR<Matrix<Scalar>> qr(aug);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(ni + m, m);

  // sqrt(1 - q^2) is read off the noise block when q is near 1; 1 - q^2
  // itself would be pure rounding there.
  Eigen::JacobiSVD<Matrix<Scalar>> svd(q.topRows(ni), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix<Scalar>& w = svd.matrixU();
  const Matrix<Scalar> sines = q.bottomRows(m) * svd.matrixV();
  Vector<Scalar> c(m);
  for (Index j = 0; j < m; ++j) {
    const Scalar s = std::min(svd.singularValues()(j), Scalar(1));
    const Scalar sine = s * s > Scalar(0.5) ? sines.col(j).norm() : std::sqrt(Scalar(1) - s * s);
    c(j) = Scalar(1) - sine;
  }
  Matrix<Scalar> gw = g * w;
  return g - gw * c.asDiagonal() * w.transpose();
}

}  // namespace detail

template <typename Scalar>
FunctionalPosterior<Scalar> posterior_functional(const CovOperator<Scalar>& op, const AdjointSet<Scalar>& adjoints,
                                                 const FgpFit<Scalar>& f) {
  if (f.beta.size() != adjoints.size()) throw InvalidInput("posterior_functional: fit does not match adjoints");
  const auto& space = op.space();
  const Index ni = space.n_interior();
  GramBundle<Scalar> g = gram(op, adjoints);

  FunctionalPosterior<Scalar> p;
  p.gbar = g.basis_phi * f.beta;
  Matrix<Scalar> w = f.chol_d.matrixL().solve(g.basis_phi.transpose());
  p.cov_g = symmetrized(g.basis_basis - w.transpose() * w);
  p.interior_factor = detail::interior_posterior_factor<Scalar>(
      space.interior_block(g.basis_basis), adjoints.coeffs.middleRows(1, ni), f.sigma * f.sigma + f.jitter);
  return p;
}

template <typename Scalar>
struct FgpPosterior {
  FeSpace<Scalar> space;
  std::vector<Scalar> eval_points;
  Vector<Scalar> mean_nodal;  // u* mean at every mesh node
  Vector<Scalar> mean;        // at eval points
  Matrix<Scalar> cov;         // at eval points; empty in diagonal-only mode
  Vector<Scalar> std_dev;     // at eval points
  Vector<Scalar> gbar;
  Matrix<Scalar> cov_g;
};

/// Pushes the functional posterior through A u* = l - g*:
/// mean = U (l - gbar) + lift, cov = U cov_g U^T with U = V A^{-1}.
/// Boundary dofs are data, so U has zero boundary columns.
template <typename Scalar>
FgpPosterior<Scalar> posterior_state(const BkModel<Scalar>& model, const FunctionalPosterior<Scalar>& fp,
                                     NoDeduce<std::span<const Scalar>> eval_points,
                                     CovarianceMode mode = CovarianceMode::Full) {
  const auto& space = model.space;
  const Index n = space.n_dof();
  const Index ni = space.n_interior();
  if (fp.gbar.size() != n) throw InvalidInput("posterior_state: functional posterior has wrong size");

  FgpPosterior<Scalar> post{space, {eval_points.begin(), eval_points.end()}, {}, {}, {}, {}, fp.gbar, fp.cov_g};
  Vector<Scalar> rhs = model.load - fp.gbar;
  post.mean_nodal = solve_dirichlet(space, rhs, model.b_left, model.b_right).coeffs;

  const RowSparse<Scalar> v = eval_matrix(space, eval_points);
  post.mean = v * post.mean_nodal;

  // U F, padded with zero boundary rows of A^{-1} F.
  Matrix<Scalar> y = Matrix<Scalar>::Zero(n, ni);
  y.middleRows(1, ni) = space.solve_interior(fp.interior_factor);
  Matrix<Scalar> z = v * y;
  post.std_dev = z.rowwise().norm();
  if (mode == CovarianceMode::Full) {
    const Index np = z.rows();
    post.cov = Matrix<Scalar>::Zero(np, np);
    post.cov.template selfadjointView<Eigen::Lower>().rankUpdate(z);
    post.cov = post.cov.template selfadjointView<Eigen::Lower>();
  }
  return post;
}

/// Mean outputs s*_i = mean u*(x_i); points must be mesh nodes.
template <typename Scalar>
Vector<Scalar> predicted_outputs(const FgpPosterior<Scalar>& post, NoDeduce<std::span<const Scalar>> points) {
  Vector<Scalar> s(static_cast<Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    s(static_cast<Index>(i)) = post.mean_nodal(require_node(post.space, points[i]));
  return s;
}

}  // namespace fgpr

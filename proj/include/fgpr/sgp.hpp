#pragma once

// Standard GP regression on point data with a squared-exponential kernel.
// Used only as the baseline the functional method is compared against.

#include <cmath>
#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "fgpr/errors.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/types.hpp"

namespace fgpr {

template <typename Scalar>
struct SeKernel {
  Scalar zeta1;  // signal std
  Scalar zeta2;  // length scale

  SeKernel(Scalar signal_std, Scalar length_scale) : zeta1(signal_std), zeta2(length_scale) {
    if (!(zeta1 > Scalar(0)) || !(zeta2 > Scalar(0)) || !std::isfinite(static_cast<double>(zeta1)) ||
        !std::isfinite(static_cast<double>(zeta2)))
      throw InvalidInput("squared-exponential hyperparameters must be finite and positive");
  }
};

template <typename Scalar>
Scalar se_kernel(const SeKernel<Scalar>& k, NoDeduce<Scalar> x, NoDeduce<Scalar> xp) {
  const Scalar r = (x - xp) / k.zeta2;
  return k.zeta1 * k.zeta1 * std::exp(Scalar(-0.5) * r * r);
}

template <typename Scalar>
Matrix<Scalar> kernel_matrix(const SeKernel<Scalar>& k, NoDeduce<std::span<const Scalar>> xs,
                             NoDeduce<std::span<const Scalar>> ys) {
  Matrix<Scalar> out(static_cast<Index>(xs.size()), static_cast<Index>(ys.size()));
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = 0; i < out.rows(); ++i)
      out(i, j) = se_kernel(k, xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
  return out;
}

template <typename Scalar>
struct SgpPosterior {
  Vector<Scalar> mean;  // at test points, offset added back
  Matrix<Scalar> cov;   // empty in diagonal-only mode
  Vector<Scalar> std_dev;
  Vector<Scalar> alpha;
  Scalar y_offset = Scalar(0);
  Scalar jitter = Scalar(0);
};

namespace detail {

// Pivoted partial Cholesky of K(X*,X*) - W^T W, with the kernel columns
// evaluated on demand. Returns G with G G^T equal to it up to a dropped
// remainder whose diagonal is below n * eps * zeta1^2. Forming the
// difference explicitly goes indefinite once the posterior variance
// falls far below the prior.
template <typename Scalar>
Matrix<Scalar> schur_factor(const SeKernel<Scalar>& kernel, std::span<const Scalar> test_x, const Matrix<Scalar>& w) {
  const Index n = static_cast<Index>(test_x.size());
  const Scalar prior_var = kernel.zeta1 * kernel.zeta1;
  const Scalar tol = Scalar(std::max<Index>(n, 1)) * std::numeric_limits<Scalar>::epsilon() * prior_var;
  Vector<Scalar> d = Vector<Scalar>::Constant(n, prior_var) - w.colwise().squaredNorm().transpose();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  Matrix<Scalar> g(n, std::min<Index>(n, 16));
  Index r = 0;
  Vector<Scalar> col(n);
  while (r < n) {
    Index p = 0;
    const Scalar dp = d.maxCoeff(&p);
    if (!(dp > tol)) break;
    const Scalar xp = test_x[static_cast<std::size_t>(p)];
    for (Index i = 0; i < n; ++i) col(i) = se_kernel(kernel, test_x[static_cast<std::size_t>(i)], xp);
    col.noalias() -= w.transpose() * w.col(p);
    if (r > 0) col.noalias() -= g.leftCols(r) * g.row(p).head(r).transpose();
    col /= std::sqrt(dp);
    for (Index i = 0; i < n; ++i)
      if (used[static_cast<std::size_t>(i)]) col(i) = Scalar(0);
    col(p) = std::sqrt(dp);
    used[static_cast<std::size_t>(p)] = true;
    if (r == g.cols()) g.conservativeResize(n, std::min<Index>(n, 2 * r));
    g.col(r++) = col;
    d -= col.cwiseAbs2();
    d(p) = Scalar(0);
  }
  return g.leftCols(r);
}

}  // namespace detail

/// Zero-mean GP on the centred data y - mean(y); the mean is added back to predictions.
template <typename Scalar>
SgpPosterior<Scalar> fit_predict(const SeKernel<Scalar>& kernel, NoDeduce<std::span<const Scalar>> train_x,
                                 const NoDeduce<Vector<Scalar>>& train_y, NoDeduce<Scalar> sigma,
                                 NoDeduce<std::span<const Scalar>> test_x,
                                 CovarianceMode mode = CovarianceMode::Full) {
  const Index m = static_cast<Index>(train_x.size());
  if (train_y.size() != m) throw InvalidInput("fit_predict: train_x and train_y lengths differ");
  if (m == 0) throw InvalidInput("fit_predict: empty training set");
  if (!(sigma >= Scalar(0))) throw InvalidInput("fit_predict: sigma must be >= 0");
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j)
      if (train_x[static_cast<std::size_t>(i)] == train_x[static_cast<std::size_t>(j)])
        throw InvalidInput("fit_predict: training inputs must be distinct");

  SgpPosterior<Scalar> post;
  post.y_offset = train_y.mean();
  const Vector<Scalar> y = train_y.array() - post.y_offset;

  Matrix<Scalar> c = kernel_matrix(kernel, train_x, train_x);
  c.diagonal().array() += sigma * sigma;
  auto chol = jittered_cholesky(c, "C = K(X,X) + sigma^2 I");
  post.jitter = chol.jitter;
  post.alpha = chol.llt.solve(y);

  const Matrix<Scalar> k_star = kernel_matrix(kernel, test_x, train_x);
  post.mean = (k_star * post.alpha).array() + post.y_offset;

  const Matrix<Scalar> w = chol.llt.matrixL().solve(k_star.transpose());
  const Matrix<Scalar> g = detail::schur_factor(kernel, test_x, w);
  post.std_dev = g.rowwise().norm();
  if (mode == CovarianceMode::Full) {
    const Index n = g.rows();
    post.cov = Matrix<Scalar>::Zero(n, n);
    post.cov.template selfadjointView<Eigen::Lower>().rankUpdate(g);
    post.cov = post.cov.template selfadjointView<Eigen::Lower>();
  }
  return post;
}

}  // namespace fgpr

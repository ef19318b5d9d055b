#pragma once

// Hyperparameter selection by maximizing the Gaussian log marginal likelihood
// log N(y | 0, D(params)). The search is a logarithmic grid followed by a
// Nelder-Mead polish whose trial points are clamped onto the box bounds, so
// a parameter can settle exactly on a bound such as zero.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include "fgpr/covariance.hpp"
#include "fgpr/errors.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/sgp.hpp"

namespace fgpr {

enum class LmlKind { Functional, Standard };

template <typename Scalar>
struct ParamBounds {
  Scalar lo;
  Scalar hi;
};

template <typename Scalar>
struct LmlProblem {
  LmlKind kind = LmlKind::Functional;
  Vector<Scalar> residual;
  /// Covariance of the residual for a parameter vector. May throw InvalidInput
  /// for inadmissible parameters; those evaluate to -inf.
  std::function<Matrix<Scalar>(const Vector<Scalar>&)> builder;
  std::vector<ParamBounds<Scalar>> bounds;
};

struct OptimizerSettings {
  double grid_lo = 1e-6;
  double grid_hi = 1e3;
  int grid_points = 25;
  int max_evals = 400;  // Nelder-Mead stage
  double tol = 1e-6;    // relative simplex diameter
};

template <typename Scalar>
struct OptResult {
  Vector<Scalar> theta_star;
  Scalar lml_star = -std::numeric_limits<Scalar>::infinity();
  int n_evals = 0;
  std::vector<std::pair<Vector<Scalar>, Scalar>> trace;
};

/// -1/2 y^T D^{-1} y - 1/2 log det D - n/2 log 2pi; -inf when D is not SPD after jitter.
template <typename Scalar>
Scalar log_marginal_likelihood(const Matrix<Scalar>& d, const NoDeduce<Vector<Scalar>>& y) {
  if (d.rows() != y.size() || d.cols() != y.size()) throw InvalidInput("LML: matrix and residual sizes differ");
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  if (y.size() == 0) return Scalar(0);
  auto chol = try_jittered_cholesky(d);
  if (!chol) return neg_inf;
  const Vector<Scalar> w = chol->llt.matrixL().solve(y);
  const Scalar n = Scalar(y.size());
  const Scalar value = Scalar(-0.5) * w.squaredNorm() - Scalar(0.5) * log_det(chol->llt) -
                       Scalar(0.5) * n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return std::isfinite(static_cast<double>(value)) ? value : neg_inf;
}

template <typename Scalar>
Scalar log_marginal_likelihood(const LmlProblem<Scalar>& problem, const NoDeduce<Vector<Scalar>>& params) {
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  if (params.size() != static_cast<Index>(problem.bounds.size())) throw InvalidInput("LML: wrong parameter count");
  for (Index i = 0; i < params.size(); ++i) {
    const auto& b = problem.bounds[static_cast<std::size_t>(i)];
    if (!(params(i) >= b.lo && params(i) <= b.hi)) return neg_inf;
  }
  Matrix<Scalar> d;
  try {
    d = problem.builder(params);
  } catch (const InvalidInput&) {
    return neg_inf;
  }
  return log_marginal_likelihood(d, problem.residual);
}

namespace detail {

template <typename Scalar>
std::vector<Scalar> grid_axis(const ParamBounds<Scalar>& b, bool include_zero, const OptimizerSettings& s) {
  std::vector<Scalar> axis;
  if (include_zero && b.lo <= Scalar(0)) axis.push_back(Scalar(0));
  const double llo = std::log10(s.grid_lo);
  const double lhi = std::log10(s.grid_hi);
  for (int k = 0; k < s.grid_points; ++k) {
    const double t = s.grid_points == 1 ? 0.0 : double(k) / double(s.grid_points - 1);
    const Scalar v = Scalar(std::pow(10.0, llo + t * (lhi - llo)));
    if (v >= b.lo && v <= b.hi) axis.push_back(v);
  }
  return axis;
}

template <typename Scalar>
Vector<Scalar> clamp_to(const Vector<Scalar>& x, const std::vector<ParamBounds<Scalar>>& bounds) {
  Vector<Scalar> y = x;
  for (Index i = 0; i < y.size(); ++i) {
    const auto& b = bounds[static_cast<std::size_t>(i)];
    y(i) = std::clamp(y(i), b.lo, b.hi);
  }
  return y;
}

}  // namespace detail

template <typename Scalar>
OptResult<Scalar> optimize(const LmlProblem<Scalar>& problem, const OptimizerSettings& settings = {}) {
  const std::size_t dim = problem.bounds.size();
  if (dim == 0) throw InvalidInput("optimize: no parameters");
  for (const auto& b : problem.bounds)
    if (!(b.lo >= Scalar(0)) || !(b.hi >= b.lo)) throw InvalidInput("optimize: bounds must satisfy 0 <= lo <= hi");

  OptResult<Scalar> res;
  auto evaluate = [&](const Vector<Scalar>& x) {
    const Scalar v = log_marginal_likelihood(problem, x);
    res.trace.emplace_back(x, v);
    ++res.n_evals;
    return v;
  };

  // Stage 1: tensor grid in lexicographic order; earlier points win ties.
  const bool include_zero = problem.kind == LmlKind::Functional;
  std::vector<std::vector<Scalar>> axes;
  for (const auto& b : problem.bounds) axes.push_back(detail::grid_axis(b, include_zero, settings));
  for (const auto& a : axes)
    if (a.empty()) throw InvalidInput("optimize: grid does not intersect the bounds");

  const Scalar tie = Scalar(1e-12);
  Vector<Scalar> best(static_cast<Index>(dim));
  Scalar best_val = -std::numeric_limits<Scalar>::infinity();
  std::size_t n_grid = 1;
  for (const auto& a : axes) n_grid *= a.size();
  for (std::size_t k = 0; k < n_grid; ++k) {
    Vector<Scalar> x(static_cast<Index>(dim));
    std::size_t rest = k;
    for (std::size_t i = dim; i-- > 0;) {
      x(static_cast<Index>(i)) = axes[i][rest % axes[i].size()];
      rest /= axes[i].size();
    }
    const Scalar v = evaluate(x);
    if (v > best_val + tie || (best_val == -std::numeric_limits<Scalar>::infinity() && v > best_val)) {
      best_val = v;
      best = x;
    }
  }
  if (!std::isfinite(static_cast<double>(best_val)))
    throw OptimizationFailure("optimize: every grid candidate is infeasible");

  // Stage 2: projected Nelder-Mead from the best grid point.
  struct Vertex {
    Vector<Scalar> x;
    Scalar f;
  };
  std::vector<Vertex> simplex;
  simplex.push_back({best, best_val});
  for (std::size_t i = 0; i < dim; ++i) {
    const auto& axis = axes[i];
    const Scalar xi = best(static_cast<Index>(i));
    Scalar step = Scalar(0.25) * xi;
    if (!(step > Scalar(0))) {
      auto above = std::upper_bound(axis.begin(), axis.end(), xi);
      step = above != axis.end() ? *above : Scalar(settings.grid_lo);
    }
    Vector<Scalar> x = best;
    x(static_cast<Index>(i)) += step;
    x = detail::clamp_to(x, problem.bounds);
    if (x == best) {
      x(static_cast<Index>(i)) -= Scalar(2) * step;
      x = detail::clamp_to(x, problem.bounds);
    }
    simplex.push_back({x, evaluate(x)});
  }

  const int nm_budget = res.n_evals + settings.max_evals;
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f > b.f; };
  const Scalar n_inv = Scalar(1) / Scalar(dim);
  while (res.n_evals < nm_budget) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    Scalar diameter = 0;
    for (std::size_t j = 1; j < simplex.size(); ++j)
      diameter = std::max(diameter, (simplex[j].x - simplex[0].x).cwiseAbs().maxCoeff());
    const Scalar scale = std::max(simplex[0].x.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
    if (diameter <= Scalar(settings.tol) * scale) break;

    Vector<Scalar> centroid = Vector<Scalar>::Zero(static_cast<Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) centroid += simplex[j].x;
    centroid *= n_inv;
    Vertex& worst = simplex.back();
    const Scalar f_second_worst = simplex[dim - 1].f;

    auto trial = [&](Scalar coeff) {
      Vector<Scalar> x = detail::clamp_to<Scalar>(centroid + coeff * (centroid - worst.x), problem.bounds);
      return Vertex{x, evaluate(x)};
    };

    Vertex refl = trial(Scalar(1));
    if (refl.f > simplex[0].f) {
      Vertex expd = trial(Scalar(2));
      worst = expd.f > refl.f ? std::move(expd) : std::move(refl);
      continue;
    }
    if (refl.f > f_second_worst) {
      worst = std::move(refl);
      continue;
    }
    if (refl.f > worst.f) {
      Vertex outside = trial(Scalar(0.5));
      if (outside.f >= refl.f) {
        worst = std::move(outside);
        continue;
      }
    } else {
      Vertex inside = trial(Scalar(-0.5));
      if (inside.f > worst.f) {
        worst = std::move(inside);
        continue;
      }
    }
    for (std::size_t j = 1; j < simplex.size(); ++j) {
      simplex[j].x = detail::clamp_to<Scalar>(simplex[0].x + Scalar(0.5) * (simplex[j].x - simplex[0].x),
                                              problem.bounds);
      simplex[j].f = evaluate(simplex[j].x);
    }
  }

  for (const auto& [x, v] : res.trace) {
    if (v > res.lml_star) {
      res.lml_star = v;
      res.theta_star = x;
    }
  }
  return res;
}

/// Functional-GP likelihood: D(theta) = theta1 Phi^T Mmat Phi + theta2 Phi^T A Phi + sigma^2 I.
template <typename Scalar>
LmlProblem<Scalar> functional_lml_problem(const AdjointSet<Scalar>& adjoints, const NoDeduce<Vector<Scalar>>& residual,
                                          NoDeduce<Scalar> sigma, NoDeduce<Scalar> upper = Scalar(1e3)) {
  auto [k_mass, k_stiff] = gram_components(adjoints);
  const Scalar noise_var = sigma * sigma;
  LmlProblem<Scalar> p;
  p.kind = LmlKind::Functional;
  p.residual = residual;
  p.bounds = {{Scalar(0), upper}, {Scalar(0), upper}};
  p.builder = [k_mass, k_stiff, noise_var](const Vector<Scalar>& theta) {
    if (!(theta(0) + theta(1) > Scalar(0))) throw InvalidInput("theta1 + theta2 must be positive");
    Matrix<Scalar> d = theta(0) * k_mass + theta(1) * k_stiff;
    d.diagonal().array() += noise_var;
    return d;
  };
  return p;
}

/// Standard-GP likelihood on centred data: C(zeta) = K_zeta(X, X) + sigma^2 I.
template <typename Scalar>
LmlProblem<Scalar> standard_lml_problem(std::vector<Scalar> train_x, const NoDeduce<Vector<Scalar>>& train_y,
                                        NoDeduce<Scalar> sigma, NoDeduce<Scalar> lower = Scalar(1e-6),
                                        NoDeduce<Scalar> upper = Scalar(1e3)) {
  LmlProblem<Scalar> p;
  p.kind = LmlKind::Standard;
  p.residual = train_y.array() - train_y.mean();
  p.bounds = {{lower, upper}, {lower, upper}};
  const Scalar noise_var = sigma * sigma;
  p.builder = [xs = std::move(train_x), noise_var](const Vector<Scalar>& zeta) {
    Matrix<Scalar> c = kernel_matrix(SeKernel<Scalar>(zeta(0), zeta(1)), std::span<const Scalar>(xs),
                                     std::span<const Scalar>(xs));
    c.diagonal().array() += noise_var;
    return c;
  };
  return p;
}

}  // namespace fgpr

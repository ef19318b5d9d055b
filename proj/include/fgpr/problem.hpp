#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"

namespace fgpr {

/// sin(pi x) with exact zeros at integers and exact odd symmetry.
template <typename Scalar>
Scalar sin_pi(Scalar x) {
  Scalar r = std::remainder(x, Scalar(2));  // exact, r in [-1, 1]
  if (r > Scalar(0.5)) r = Scalar(1) - r;
  else if (r < Scalar(-0.5)) r = Scalar(-1) - r;
  return std::sin(std::numbers::pi_v<Scalar> * r);
}

/// Extended Chebyshev nodes: x_i = -cos((2i-1)pi/2M) / cos(pi/2M), endpoints exactly +-1.
/// The second half mirrors the first, so the set is exactly antisymmetric.
template <typename Scalar>
std::vector<Scalar> chebyshev_points(int m) {
  if (m < 2) throw InvalidInput("chebyshev_points needs M >= 2");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar denom = std::cos(pi / Scalar(2 * m));
  std::vector<Scalar> x(static_cast<std::size_t>(m));
  for (int i = 1; i <= m / 2; ++i) {
    const Scalar xi = -std::cos(Scalar(2 * i - 1) * pi / Scalar(2 * m)) / denom;
    x[static_cast<std::size_t>(i - 1)] = xi;
    x[static_cast<std::size_t>(m - i)] = -xi;
  }
  if (m % 2 == 1) x[static_cast<std::size_t>(m / 2)] = Scalar(0);
  x.front() = Scalar(-1);
  x.back() = Scalar(1);
  return x;
}

/// u_true(x) = sin(pi x)/pi^2 + sin(4 pi x)/(4 pi^2).
template <typename Scalar>
Scalar true_state(Scalar x) {
  const Scalar pi2 = std::numbers::pi_v<Scalar> * std::numbers::pi_v<Scalar>;
  return sin_pi(x) / pi2 + sin_pi(Scalar(4) * x) / (Scalar(4) * pi2);
}

/// f_true(x) = sin(pi x) + 4 sin(4 pi x); -u_true'' = f_true.
template <typename Scalar>
Scalar true_source(Scalar x) {
  return sin_pi(x) + Scalar(4) * sin_pi(Scalar(4) * x);
}

/// Best-knowledge source f(x) = 4 sin(4 pi x).
template <typename Scalar>
Scalar bk_source(Scalar x) {
  return Scalar(4) * sin_pi(Scalar(4) * x);
}

template <typename Scalar>
struct BkModel {
  FeSpace<Scalar> space;
  Vector<Scalar> source;  // nodal values of f
  Vector<Scalar> load;    // l_i = int f v_i
  Scalar b_left;
  Scalar b_right;
};

template <typename Scalar>
BkModel<Scalar> make_bk_model(const FeSpace<Scalar>& space, NoDeduce<Vector<Scalar>> source,
                              NoDeduce<Scalar> b_left, NoDeduce<Scalar> b_right) {
  if (source.size() != space.n_dof()) throw InvalidInput("source length != n_dof");
  if (!std::isfinite(static_cast<double>(b_left)) || !std::isfinite(static_cast<double>(b_right)))
    throw InvalidInput("boundary data must be finite");
  Vector<Scalar> load = space.mass() * source;
  return BkModel<Scalar>{space, std::move(source), std::move(load), b_left, b_right};
}

/// Interpolates `f` at the mesh nodes.
template <typename Scalar, typename Fn>
Vector<Scalar> interpolate(const FeSpace<Scalar>& space, Fn&& f) {
  const auto& nodes = space.mesh().nodes();
  Vector<Scalar> v(space.n_dof());
  for (Index i = 0; i < v.size(); ++i) v(i) = f(nodes[static_cast<std::size_t>(i)]);
  return v;
}

template <typename Scalar>
Index require_node(const FeSpace<Scalar>& space, NoDeduce<Scalar> x) {
  auto idx = space.mesh().node_index(x);
  if (!idx) throw InvalidInput("observation point " + std::to_string(static_cast<double>(x)) +
                               " is not a mesh node");
  return *idx;
}

template <typename Scalar>
struct BkSolution {
  Field<Scalar> u;
  Vector<Scalar> outputs;  // s_i = u(x_i)
};

template <typename Scalar>
BkSolution<Scalar> solve_bk(const BkModel<Scalar>& model, NoDeduce<std::span<const Scalar>> points) {
  Field<Scalar> u = solve_dirichlet(model.space, model.load, model.b_left, model.b_right);
  Vector<Scalar> s(static_cast<Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    s(static_cast<Index>(i)) = u.coeffs(require_node(model.space, points[i]));
  return BkSolution<Scalar>{std::move(u), std::move(s)};
}

/// Adjoint states a(v, phi_i) = -v(x_i), phi_i = 0 on the boundary.
template <typename Scalar>
struct AdjointSet {
  FeSpace<Scalar> space;
  std::vector<Scalar> points;
  std::vector<Index> nodes;
  Matrix<Scalar> coeffs;  // n_dof x M', column i = phi_i

  Index size() const { return coeffs.cols(); }
  Field<Scalar> field(Index i) const { return Field<Scalar>(space, coeffs.col(i)); }
};

template <typename Scalar>
AdjointSet<Scalar> solve_adjoints(const FeSpace<Scalar>& space, NoDeduce<std::span<const Scalar>> interior_points) {
  const Index m = static_cast<Index>(interior_points.size());
  const Index n = space.n_dof();
  AdjointSet<Scalar> set{space, {interior_points.begin(), interior_points.end()}, {}, Matrix<Scalar>::Zero(n, m)};
  Matrix<Scalar> rhs = Matrix<Scalar>::Zero(space.n_interior(), m);
  for (Index i = 0; i < m; ++i) {
    const Index node = require_node(space, interior_points[static_cast<std::size_t>(i)]);
    if (node == 0 || node == n - 1) throw InvalidInput("adjoint point must be interior");
    set.nodes.push_back(node);
    rhs(node - 1, i) = Scalar(-1);
  }
  if (m > 0) set.coeffs.block(1, 0, space.n_interior(), m) = space.solve_interior(rhs);
  return set;
}

template <typename Scalar>
struct ObservationSet {
  std::vector<Scalar> points;
  Vector<Scalar> data;
  Scalar noise_sigma = Scalar(0);
  std::uint64_t rng_seed = 0;
};

/// d_i = u_true(x_i) + sigma * xi_i, xi_i ~ N(0, 1) from a seeded mt19937_64.
template <typename Scalar>
ObservationSet<Scalar> synthesize_observations(NoDeduce<std::span<const Scalar>> points, NoDeduce<Scalar> noise_sigma,
                                               std::uint64_t rng_seed) {
  if (!(noise_sigma >= Scalar(0))) throw InvalidInput("noise sigma must be >= 0");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= Scalar(-1) && points[i] <= Scalar(1)))
      throw InvalidInput("observation points must lie in [-1, 1]");
    if (i > 0 && !(points[i] > points[i - 1]))
      throw InvalidInput("observation points must be strictly increasing");
  }
  ObservationSet<Scalar> obs{{points.begin(), points.end()}, Vector<Scalar>(static_cast<Index>(points.size())),
                             noise_sigma, rng_seed};
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Scalar d = true_state(points[i]);
    if (noise_sigma > Scalar(0)) d += noise_sigma * Scalar(normal(rng));
    obs.data(static_cast<Index>(i)) = d;
  }
  return obs;
}

}  // namespace fgpr

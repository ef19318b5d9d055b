#pragma once

// Piecewise-linear finite elements on (-1, 1).
//
// The basis is nodal, so a Field's coefficient vector is its vector of
// nodal values. Dirichlet data live on the two boundary dofs and are
// eliminated by lifting: interior solves use the SPD block A_II only.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgpr/errors.hpp"
#include "fgpr/types.hpp"

namespace fgpr {

template <typename Scalar>
class Mesh {
 public:
  explicit Mesh(std::vector<Scalar> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) throw InvalidInput("mesh needs at least 3 nodes");
    if (nodes_.front() != Scalar(-1) || nodes_.back() != Scalar(1))
      throw InvalidInput("mesh must span exactly [-1, 1]");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) throw InvalidInput("mesh nodes must be strictly increasing");
    }
  }

  const std::vector<Scalar>& nodes() const { return nodes_; }
  Index size() const { return static_cast<Index>(nodes_.size()); }
  Index n_elements() const { return size() - 1; }
  Scalar operator[](Index i) const { return nodes_[static_cast<std::size_t>(i)]; }

  /// Index of the node bitwise equal to x, if any.
  std::optional<Index> node_index(Scalar x) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.end() || *it != x) return std::nullopt;
    return static_cast<Index>(it - nodes_.begin());
  }

 private:
  std::vector<Scalar> nodes_;
};

/// Uniform grid on [-1, 1] with `required_points` inserted as nodes. A uniform
/// node within 1e-12 of a required point is replaced by that point.
template <typename Scalar>
Mesh<Scalar> build_mesh(int n_elements, std::span<const Scalar> required_points) {
  if (n_elements < 2) throw InvalidInput("n_elements must be >= 2");
  const Scalar tol = Scalar(1e-12);
  std::vector<Scalar> req(required_points.begin(), required_points.end());
  std::sort(req.begin(), req.end());
  for (std::size_t i = 0; i < req.size(); ++i) {
    if (!std::isfinite(static_cast<double>(req[i])) || !(req[i] > Scalar(-1) + tol) ||
        !(req[i] < Scalar(1) - tol))
      throw InvalidInput("required mesh points must lie strictly inside (-1, 1)");
    if (i > 0 && !(req[i] - req[i - 1] > tol))
      throw InvalidInput("required mesh points must be pairwise distinct");
  }

  std::vector<Scalar> nodes;
  nodes.reserve(static_cast<std::size_t>(n_elements) + 1 + req.size());
  for (int k = 0; k <= n_elements; ++k) {
    const Scalar x = (k == n_elements) ? Scalar(1) : Scalar(-1) + Scalar(2 * k) / Scalar(n_elements);
    const bool boundary = (k == 0 || k == n_elements);
    const bool shadowed = !boundary && std::any_of(req.begin(), req.end(), [&](Scalar r) {
      return std::abs(r - x) < tol;
    });
    if (!shadowed) nodes.push_back(x);
  }
  nodes.insert(nodes.end(), req.begin(), req.end());
  std::sort(nodes.begin(), nodes.end());
  return Mesh<Scalar>(std::move(nodes));
}

/// Assembled P1 space. Cheap to copy: all state is shared and immutable.
template <typename Scalar>
class FeSpace {
 public:
  explicit FeSpace(Mesh<Scalar> mesh) : data_(std::make_shared<const Data>(std::move(mesh))) {}

  const Mesh<Scalar>& mesh() const { return data_->mesh; }
  Index n_dof() const { return data_->mesh.size(); }
  /// Interior dofs are the contiguous range [1, n_dof - 2].
  Index n_interior() const { return n_dof() - 2; }
  const Matrix<Scalar>& stiffness() const { return data_->stiffness; }
  const Matrix<Scalar>& mass() const { return data_->mass; }

  auto interior_block(const Matrix<Scalar>& full) const {
    return full.block(1, 1, n_interior(), n_interior());
  }

  /// Solve A_II x = rhs (any number of columns) with the cached factor.
  template <typename Derived>
  Matrix<Scalar> solve_interior(const Eigen::MatrixBase<Derived>& rhs) const {
    if (data_->interior_llt.info() != Eigen::Success)
      throw NumericalFailure("interior stiffness block is not positive definite");
    if (rhs.rows() != n_interior()) throw InvalidInput("interior rhs has wrong length");
    return data_->interior_llt.solve(rhs);
  }

  bool same_as(const FeSpace& other) const { return data_ == other.data_; }

 private:
  struct Data {
    explicit Data(Mesh<Scalar> m) : mesh(std::move(m)) {
      const Index n = mesh.size();
      stiffness = Matrix<Scalar>::Zero(n, n);
      mass = Matrix<Scalar>::Zero(n, n);
      for (Index e = 0; e + 1 < n; ++e) {
        const Scalar h = mesh[e + 1] - mesh[e];
        const Scalar k = Scalar(1) / h;
        const Scalar m_diag = h / Scalar(3);
        const Scalar m_off = h / Scalar(6);
        stiffness(e, e) += k;
        stiffness(e + 1, e + 1) += k;
        stiffness(e, e + 1) -= k;
        stiffness(e + 1, e) -= k;
        mass(e, e) += m_diag;
        mass(e + 1, e + 1) += m_diag;
        mass(e, e + 1) += m_off;
        mass(e + 1, e) += m_off;
      }
      interior_llt.compute(stiffness.block(1, 1, n - 2, n - 2));
    }
    Mesh<Scalar> mesh;
    Matrix<Scalar> stiffness;
    Matrix<Scalar> mass;
    Eigen::LLT<Matrix<Scalar>> interior_llt;
  };

  std::shared_ptr<const Data> data_;
};

template <typename Scalar>
FeSpace<Scalar> assemble(Mesh<Scalar> mesh) {
  return FeSpace<Scalar>(std::move(mesh));
}

/// A function in the space, stored by nodal coefficients.
template <typename Scalar>
struct Field {
  FeSpace<Scalar> space;
  Vector<Scalar> coeffs;

  Field(FeSpace<Scalar> s, Vector<Scalar> c) : space(std::move(s)), coeffs(std::move(c)) {
    if (coeffs.size() != space.n_dof()) throw InvalidInput("field coefficient length != n_dof");
  }
};

template <typename Scalar, typename Derived>
Field<Scalar> solve_dirichlet(const FeSpace<Scalar>& space, const Eigen::MatrixBase<Derived>& rhs,
                              NoDeduce<Scalar> b_left, NoDeduce<Scalar> b_right) {
  const Index n = space.n_dof();
  if (rhs.size() != n) throw InvalidInput("rhs length != n_dof");
  const Index ni = space.n_interior();
  const auto& a = space.stiffness();
  Vector<Scalar> lifted = rhs.segment(1, ni) - a.block(1, 0, ni, 1).col(0) * b_left -
                          a.block(1, n - 1, ni, 1).col(0) * b_right;
  Vector<Scalar> u(n);
  u(0) = b_left;
  u(n - 1) = b_right;
  u.segment(1, ni) = space.solve_interior(lifted);
  return Field<Scalar>(space, std::move(u));
}

template <typename Scalar, typename Derived>
Scalar l2_norm(const FeSpace<Scalar>& space, const Eigen::MatrixBase<Derived>& nodal_values) {
  if (nodal_values.size() != space.n_dof()) throw InvalidInput("vector length != n_dof");
  const Scalar sq = nodal_values.dot(space.mass() * nodal_values);
  return std::sqrt(std::max(sq, Scalar(0)));
}

/// Rows hold the hat-function values at each point (at most two nonzeros).
template <typename Scalar>
RowSparse<Scalar> eval_matrix(const FeSpace<Scalar>& space, NoDeduce<std::span<const Scalar>> points) {
  const auto& nodes = space.mesh().nodes();
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Scalar x = points[i];
    if (!(x >= Scalar(-1) && x <= Scalar(1)))
      throw InvalidInput("evaluation point outside [-1, 1]: " + std::to_string(static_cast<double>(x)));
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    Index right = std::min<Index>(static_cast<Index>(it - nodes.begin()), space.n_dof() - 1);
    Index left = right - 1;
    const Scalar t = (x - nodes[left]) / (nodes[right] - nodes[left]);
    const auto row = static_cast<Index>(i);
    if (t != Scalar(1)) entries.emplace_back(row, left, Scalar(1) - t);
    if (t != Scalar(0)) entries.emplace_back(row, right, t);
  }
  RowSparse<Scalar> v(static_cast<Index>(points.size()), space.n_dof());
  v.setFromTriplets(entries.begin(), entries.end());
  return v;
}

}  // namespace fgpr

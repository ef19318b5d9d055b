#pragma once

#include <cmath>

#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"
#include "fgpr/linalg.hpp"
#include "fgpr/problem.hpp"

namespace fgpr {

/// k(v, w) = theta1 * int v w + theta2 * int v' w'.
template <typename Scalar>
class CovOperator {
 public:
  CovOperator(FeSpace<Scalar> space, Scalar theta1, Scalar theta2)
      : space_(std::move(space)), theta1_(theta1), theta2_(theta2) {
    if (!std::isfinite(static_cast<double>(theta1)) || !std::isfinite(static_cast<double>(theta2)))
      throw InvalidInput("covariance hyperparameters must be finite");
    if (theta1 < Scalar(0) || theta2 < Scalar(0))
      throw InvalidInput("covariance hyperparameters must be nonnegative");
    if (!(theta1 + theta2 > Scalar(0))) throw InvalidInput("theta1 + theta2 must be positive");
  }

  const FeSpace<Scalar>& space() const { return space_; }
  Scalar theta1() const { return theta1_; }
  Scalar theta2() const { return theta2_; }

  /// theta1 * Mmat + theta2 * A over all dofs.
  Matrix<Scalar> matrix() const {
    return theta1_ * space_.mass() + theta2_ * space_.stiffness();
  }

 private:
  FeSpace<Scalar> space_;
  Scalar theta1_;
  Scalar theta2_;
};

template <typename Scalar>
Scalar k_apply(const CovOperator<Scalar>& op, const Field<Scalar>& v, const Field<Scalar>& w) {
  if (!v.space.same_as(op.space()) || !w.space.same_as(op.space()))
    throw InvalidInput("k_apply: fields live on a different space than the operator");
  const auto& s = op.space();
  return op.theta1() * v.coeffs.dot(s.mass() * w.coeffs) +
         op.theta2() * v.coeffs.dot(s.stiffness() * w.coeffs);
}

template <typename Scalar>
struct GramBundle {
  Matrix<Scalar> phi_phi;      // M' x M', k(phi_i, phi_j)
  Matrix<Scalar> basis_phi;    // n_dof x M', k(v_j, phi_i)
  Matrix<Scalar> basis_basis;  // n_dof x n_dof, theta1 Mmat + theta2 A
};

template <typename Scalar>
GramBundle<Scalar> gram(const CovOperator<Scalar>& op, const AdjointSet<Scalar>& adjoints) {
  if (!adjoints.space.same_as(op.space()))
    throw InvalidInput("gram: adjoints live on a different space than the operator");
  GramBundle<Scalar> g;
  g.basis_basis = op.matrix();
  g.basis_phi = g.basis_basis * adjoints.coeffs;
  g.phi_phi = symmetrized(adjoints.coeffs.transpose() * g.basis_phi);
  return g;
}

/// The two parameter-free pieces of K(Phi, Phi): Phi^T Mmat Phi and Phi^T A Phi.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> gram_components(const AdjointSet<Scalar>& adjoints) {
  const auto& s = adjoints.space;
  const auto& phi = adjoints.coeffs;
  return {symmetrized(phi.transpose() * (s.mass() * phi)),
          symmetrized(phi.transpose() * (s.stiffness() * phi))};
}

}  // namespace fgpr

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "fgpr/errors.hpp"
#include "fgpr/types.hpp"

namespace fgpr {

/// Cholesky factor of `a + jitter * I`.
template <typename Scalar>
struct JitteredCholesky {
  Eigen::LLT<Matrix<Scalar>> llt;
  Scalar jitter = Scalar(0);
};

template <typename Derived>
auto symmetrized(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return ((a + a.transpose()) * Scalar(0.5)).eval();
}

/// Plain Cholesky first; on failure retry with jitter of
/// 1e-12, 1e-11, ..., 1e-8 times the mean diagonal entry.
template <typename Scalar>
std::optional<JitteredCholesky<Scalar>> try_jittered_cholesky(const Matrix<Scalar>& a) {
  if (a.rows() != a.cols() || !a.allFinite()) return std::nullopt;
  JitteredCholesky<Scalar> out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;
  const Index n = a.rows();
  const Scalar scale = a.trace() / Scalar(n);
  if (!(scale > Scalar(0))) return std::nullopt;
  static constexpr std::array<double, 5> kLevels{1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  for (double level : kLevels) {
    const Scalar jitter = Scalar(level) * scale;
    Matrix<Scalar> shifted = a;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  return std::nullopt;
}

template <typename Scalar>
JitteredCholesky<Scalar> jittered_cholesky(const Matrix<Scalar>& a, const std::string& what) {
  auto chol = try_jittered_cholesky(a);
  if (!chol) {
    throw NumericalFailure("Cholesky factorization of " + what + " (" + std::to_string(a.rows()) +
                           "x" + std::to_string(a.cols()) + ") failed after maximal jitter");
  }
  return std::move(*chol);
}

/// log det from the Cholesky factor: 2 * sum(log diag L).
template <typename Scalar>
Scalar log_det(const Eigen::LLT<Matrix<Scalar>>& llt) {
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar>
Scalar min_eigenvalue(const Matrix<Scalar>& a) {
  if (a.size() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(a), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolve did not converge");
  return es.eigenvalues().minCoeff();
}

/// Eigenvalue floor used throughout for "numerically PSD": lambda_min >= -rel * trace / n.
template <typename Scalar>
bool is_numerically_psd(const Matrix<Scalar>& a, NoDeduce<Scalar> rel = Scalar(1e-10)) {
  if (a.size() == 0) return true;
  const Scalar floor = -rel * std::abs(a.trace()) / Scalar(a.rows());
  return min_eigenvalue(a) >= floor;
}

}  // namespace fgpr

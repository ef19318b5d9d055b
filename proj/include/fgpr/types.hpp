#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <type_traits>

namespace fgpr {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowSparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// Parameter type excluded from template deduction; the scalar comes from
/// the leading argument, so vectors, spans and Eigen expressions convert.
template <typename T>
using NoDeduce = std::type_identity_t<T>;

/// Whether posterior routines keep the full covariance or only its diagonal.
enum class CovarianceMode { Full, DiagonalOnly };

}  // namespace fgpr

#pragma once

#include <stdexcept>
#include <string>

namespace fgpr {

/// Bad arguments: out-of-range points, mismatched sizes, invalid hyperparameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or eigensolve broke down.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every hyperparameter candidate was infeasible.
class OptimizationFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace fgpr

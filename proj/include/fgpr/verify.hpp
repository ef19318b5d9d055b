#pragma once

// Cross-checks of the functional GP against the reference routes in
// oracles.hpp. Each check returns the measured discrepancies; `run_verification`
// compares them with fixed thresholds.

#include <cstdint>
#include <string>
#include <vector>

namespace fgpr {

struct KernelTrickReport {
  double mean_rel_err = 0;      // full eigenbasis vs kernel form
  double var_rel_err = 0;
  double truncated_excess = 0;  // max(var_truncated - var_full)
  int n_test = 0;
};

/// Chebyshev observations on a uniform mesh, test functionals = interior hat functions.
KernelTrickReport check_kernel_trick(int n_elements = 32, int m = 6, double sigma = 0.0);

struct KktReport {
  int m = 0;
  double sigma = 0;
  double theta1 = 0, theta2 = 0;
  double mean_l2_diff = 0;  // || u_kkt - mean u* ||
  double beta_rel_diff = 0;
  double max_stationarity = 0;
};

/// Hyperparameters come from the usual search on the same mesh.
KktReport check_kkt(int m, double sigma, int n_elements = 256, std::uint64_t seed = 0);

struct AdjointReport {
  double rel_err = 0;  // max_i |g(phi_i) - (s*_i - s_i)| / max_i |s*_i - s_i|
};

AdjointReport check_adjoint_identity(int n_elements = 64, int m = 10, std::uint64_t seed = 7);

struct CheckResult {
  std::string name;
  double measured = 0;
  double threshold = 0;
  bool passed = false;
};

std::vector<CheckResult> run_verification();

}  // namespace fgpr

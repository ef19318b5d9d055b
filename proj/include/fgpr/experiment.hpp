#pragma once

// Double-precision experiment harness: the end-to-end pipeline for one
// observation count M, the sweep over M, CSV output and JSON config.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fgpr/fgp.hpp"
#include "fgpr/hyperopt.hpp"
#include "fgpr/problem.hpp"
#include "fgpr/sgp.hpp"

namespace fgpr {

struct RunConfig {
  int n_elements = 2000;
  int m_min = 4;
  int m_max = 15;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  OptimizerSettings optimizer;
  double theta_upper = 1e3;
  std::filesystem::path out_dir = ".";
  bool diag_only = false;
  // Replace interior data by the best-knowledge outputs, so the correction vanishes.
  bool data_equals_bk = false;
  // x,d pairs; overrides the synthetic Chebyshev observations.
  std::optional<std::filesystem::path> data_csv;

  void validate() const;
};

/// Reads a JSON object whose keys mirror the RunConfig fields. Fields that are
/// absent keep the values already in `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Reads x,d pairs (an optional header line is skipped). Points must be
/// strictly increasing and start and end at -1 and 1.
ObservationSet<double> read_observations_csv(const std::filesystem::path& path);

struct CaseResult {
  int m = 0;
  double theta1 = 0, theta2 = 0;
  double err_fgp = 0, std_fgp = 0;
  double zeta1 = 0, zeta2 = 0;
  double err_sgp = 0, std_sgp = 0;
  std::string status = "ok";
};

/// Everything produced by one case, kept for plotting and for checks.
struct CaseDetail {
  CaseResult result;
  ObservationSet<double> observations;
  std::vector<double> interior_points;
  std::vector<double> nodes;
  Vector<double> u_true;  // nodal
  Vector<double> u_bk;    // nodal
  Vector<double> bk_outputs;
  Vector<double> residual;
  OptResult<double> theta_opt;
  OptResult<double> zeta_opt;
  Matrix<double> k_phi_phi;  // K(Phi, Phi) without the noise term
  FgpPosterior<double> fgp;
  SgpPosterior<double> sgp;
};

/// Synthetic Chebyshev observations for M points, or the --data file.
ObservationSet<double> observations_for(const RunConfig& config, int m);

/// Runs the pipeline on the given observations. Errors are rethrown with the
/// failing stage prefixed to the message.
CaseDetail run_case(const RunConfig& config, const ObservationSet<double>& obs);
CaseDetail run_case(const RunConfig& config, int m);

using CaseObserver = std::function<void(const CaseDetail&)>;

/// Runs M = m_min..m_max, writing table.csv and points_M<M>.csv into out_dir.
/// A failed case becomes a row of nan values and is reported on stderr and in
/// table_status.csv; the sweep continues.
std::vector<CaseResult> run_table(const RunConfig& config, const CaseObserver& observer = {});

inline constexpr const char* kTableHeader = "M,theta1,theta2,err_fgp,std_fgp,zeta1,zeta2,err_sgp,std_sgp";
inline constexpr const char* kPointsHeader = "x,u_true,u_bk,mean_fgp,std_fgp,mean_sgp,std_sgp";

std::string format_table(const std::vector<CaseResult>& rows);
std::string format_points(const CaseDetail& detail);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::filesystem::path points_path(const RunConfig& config, int m);

}  // namespace fgpr

#include "fgpr/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fgpr/errors.hpp"
#include "fgpr/fem1d.hpp"

namespace fgpr {

namespace {

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string(stage) + ": " + e.what());
  } catch (const OptimizationFailure& e) {
    throw OptimizationFailure(std::string(stage) + ": " + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string(stage) + ": " + e.what());
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (n_elements < 2) throw InvalidInput("n_elements must be >= 2");
  if (m_min < 3 || m_max < m_min) throw InvalidInput("M range must satisfy 3 <= m_min <= m_max");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be finite and >= 0");
  if (!(optimizer.grid_lo > 0.0) || !(optimizer.grid_hi > optimizer.grid_lo))
    throw InvalidInput("grid bounds must satisfy 0 < grid_lo < grid_hi");
  if (optimizer.grid_points < 1) throw InvalidInput("grid_points must be >= 1");
  if (optimizer.max_evals < 0) throw InvalidInput("max_evals must be >= 0");
  if (!(optimizer.tol > 0.0)) throw InvalidInput("tol must be > 0");
  if (!(theta_upper > 0.0)) throw InvalidInput("theta_upper must be > 0");
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");

  RunConfig c = std::move(base);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_elements") c.n_elements = v.get<int>();
      else if (key == "m_min") c.m_min = v.get<int>();
      else if (key == "m_max") c.m_max = v.get<int>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "grid_lo") c.optimizer.grid_lo = v.get<double>();
      else if (key == "grid_hi") c.optimizer.grid_hi = v.get<double>();
      else if (key == "grid_points") c.optimizer.grid_points = v.get<int>();
      else if (key == "max_evals") c.optimizer.max_evals = v.get<int>();
      else if (key == "tol") c.optimizer.tol = v.get<double>();
      else if (key == "theta_upper") c.theta_upper = v.get<double>();
      else if (key == "out_dir") c.out_dir = v.get<std::string>();
      else if (key == "diag_only") c.diag_only = v.get<bool>();
      else if (key == "data_equals_bk") c.data_equals_bk = v.get<bool>();
      else if (key == "data_csv") c.data_csv = v.get<std::string>();
      else throw InvalidInput("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  return c;
}

ObservationSet<double> read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open data file " + path.string());
  ObservationSet<double> obs;
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput("data line " + std::to_string(lineno) + ": expected x,d");
    double x = 0, d = 0;
    try {
      std::size_t used = 0;
      x = std::stod(line.substr(0, comma), &used);
      d = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      if (lineno == 1 && obs.points.empty()) continue;  // header
      throw InvalidInput("data line " + std::to_string(lineno) + ": not a number pair");
    }
    if (!std::isfinite(x) || !std::isfinite(d)) throw InvalidInput("data line " + std::to_string(lineno) + ": non-finite value");
    obs.points.push_back(x);
    values.push_back(d);
  }
  if (obs.points.size() < 3) throw InvalidInput("data file needs at least 3 points");
  if (obs.points.front() != -1.0 || obs.points.back() != 1.0)
    throw InvalidInput("data file must include the boundary points -1 and 1");
  for (std::size_t i = 1; i < obs.points.size(); ++i)
    if (!(obs.points[i] > obs.points[i - 1])) throw InvalidInput("data points must be strictly increasing");
  obs.data = Eigen::Map<const Vector<double>>(values.data(), static_cast<Index>(values.size()));
  return obs;
}

ObservationSet<double> observations_for(const RunConfig& config, int m) {
  if (config.data_csv) return read_observations_csv(*config.data_csv);
  const auto points = chebyshev_points<double>(m);
  return synthesize_observations<double>(points, config.sigma, config.seed);
}

CaseDetail run_case(const RunConfig& config, const ObservationSet<double>& obs) {
  config.validate();
  const auto m = static_cast<Index>(obs.points.size());
  if (m < 3) throw InvalidInput("need at least 3 observation points");
  if (obs.data.size() != m) throw InvalidInput("observation data length != number of points");

  CaseResult result;
  result.m = static_cast<int>(m);
  ObservationSet<double> observations = obs;
  std::vector<double> interior_points(obs.points.begin() + 1, obs.points.end() - 1);
  const std::span<const double> interior(interior_points);
  const double sigma = config.sigma;
  const auto mode = config.diag_only ? CovarianceMode::DiagonalOnly : CovarianceMode::Full;

  const FeSpace<double> space =
      in_stage("mesh", [&] { return assemble(build_mesh<double>(config.n_elements, interior)); });
  std::vector<double> nodes = space.mesh().nodes();
  Vector<double> u_true = interpolate(space, [](double x) { return true_state(x); });

  const BkModel<double> model = in_stage("best-knowledge solve", [&] {
    return make_bk_model(space, interpolate(space, [](double x) { return bk_source(x); }), obs.data(0),
                         obs.data(m - 1));
  });
  BkSolution<double> bk = in_stage("best-knowledge solve", [&] { return solve_bk(model, interior); });
  if (config.data_equals_bk) observations.data.segment(1, m - 2) = bk.outputs;
  Vector<double> residual = observations.data.segment(1, m - 2) - bk.outputs;

  const AdjointSet<double> adjoints = in_stage("adjoint solve", [&] { return solve_adjoints(space, interior); });

  OptResult<double> theta_opt = in_stage("functional hyperparameter search", [&] {
    return optimize(functional_lml_problem(adjoints, residual, sigma, config.theta_upper), config.optimizer);
  });
  result.theta1 = theta_opt.theta_star(0);
  result.theta2 = theta_opt.theta_star(1);

  Matrix<double> k_phi_phi;
  FgpPosterior<double> fgp = in_stage("functional posterior", [&] {
    const CovOperator<double> op(space, result.theta1, result.theta2);
    const FgpFit<double> f = fit(op, adjoints, residual, sigma);
    k_phi_phi = f.d;
    k_phi_phi.diagonal().array() -= sigma * sigma;
    return posterior_state(model, posterior_functional(op, adjoints, f), std::span<const double>(nodes), mode);
  });
  result.err_fgp = l2_norm(space, Vector<double>(u_true - fgp.mean_nodal));
  result.std_fgp = l2_norm(space, fgp.std_dev);

  OptResult<double> zeta_opt = in_stage("standard GP hyperparameter search", [&] {
    return optimize(standard_lml_problem(observations.points, observations.data, sigma, config.optimizer.grid_lo,
                                         config.theta_upper),
                    config.optimizer);
  });
  result.zeta1 = zeta_opt.theta_star(0);
  result.zeta2 = zeta_opt.theta_star(1);
  SgpPosterior<double> sgp = in_stage("standard GP posterior", [&] {
    return fit_predict(SeKernel<double>(result.zeta1, result.zeta2), std::span<const double>(observations.points),
                       observations.data, sigma, std::span<const double>(nodes), mode);
  });
  result.err_sgp = l2_norm(space, Vector<double>(u_true - sgp.mean));
  result.std_sgp = l2_norm(space, sgp.std_dev);

  return CaseDetail{std::move(result),      std::move(observations), std::move(interior_points), std::move(nodes),
                    std::move(u_true),      std::move(bk.u.coeffs),  std::move(bk.outputs),      std::move(residual),
                    std::move(theta_opt),   std::move(zeta_opt),     std::move(k_phi_phi),       std::move(fgp),
                    std::move(sgp)};
}

CaseDetail run_case(const RunConfig& config, int m) {
  config.validate();
  if (m < 3) throw InvalidInput("M must be >= 3");
  return run_case(config, in_stage("observations", [&] { return observations_for(config, m); }));
}

std::filesystem::path points_path(const RunConfig& config, int m) {
  return config.out_dir / ("points_M" + std::to_string(m) + ".csv");
}

std::vector<CaseResult> run_table(const RunConfig& config, const CaseObserver& observer) {
  config.validate();
  if (config.data_csv) throw InvalidInput("a data file applies to a single case, not a table sweep");
  std::filesystem::create_directories(config.out_dir);

  std::vector<CaseResult> rows;
  std::string status = "M,status\n";
  for (int m = config.m_min; m <= config.m_max; ++m) {
    CaseResult row;
    row.m = m;
    try {
      CaseDetail detail = run_case(config, m);
      write_file_atomic(points_path(config, m), format_points(detail));
      if (observer) observer(detail);
      row = detail.result;
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row = CaseResult{m, nan, nan, nan, nan, nan, nan, nan, nan, e.what()};
      std::cerr << "M = " << m << " failed: " << e.what() << '\n';
    }
    std::string s = row.status;
    for (char& ch : s)
      if (ch == '\n' || ch == ',') ch = ' ';
    status += std::to_string(m) + "," + s + "\n";
    rows.push_back(std::move(row));
  }
  write_file_atomic(config.out_dir / "table.csv", format_table(rows));
  write_file_atomic(config.out_dir / "table_status.csv", status);
  return rows;
}

std::string format_table(const std::vector<CaseResult>& rows) {
  std::string out = std::string(kTableHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.m);
    for (double v : {r.theta1, r.theta2, r.err_fgp, r.std_fgp, r.zeta1, r.zeta2, r.err_sgp, r.std_sgp})
      out += "," + fmt("%.5e", v);
    out += "\n";
  }
  return out;
}

std::string format_points(const CaseDetail& d) {
  std::string out = std::string(kPointsHeader) + "\n";
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const auto k = static_cast<Index>(i);
    out += fmt("%.12e", d.nodes[i]);
    for (double v : {d.u_true(k), d.u_bk(k), d.fgp.mean(k), d.fgp.std_dev(k), d.sgp.mean(k), d.sgp.std_dev(k)})
      out += "," + fmt("%.12e", v);
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.close();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fgpr

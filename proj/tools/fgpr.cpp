// fgpr: functional GP regression experiments.
//
//   fgpr table            sweep over M, writes table.csv and points_M<M>.csv
//   fgpr case --m 8       one case, writes points_M8.csv
//   fgpr verify           oracle equivalence checks
//
// Exit status: 0 success, 1 numerical failure, 2 invalid input.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fgpr/errors.hpp"
#include "fgpr/experiment.hpp"
#include "fgpr/verify.hpp"

namespace {

struct Overrides {
  std::optional<int> elements;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::optional<std::string> data;
  bool diag_only = false;
  bool data_equals_bk = false;
  std::optional<int> m_min, m_max, m;
};

fgpr::RunConfig make_config(const Overrides& o) {
  fgpr::RunConfig c;
  if (o.config) c = fgpr::load_config(*o.config, c);
  if (o.elements) c.n_elements = *o.elements;
  if (o.sigma) c.sigma = *o.sigma;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.data) c.data_csv = *o.data;
  if (o.diag_only) c.diag_only = true;
  if (o.data_equals_bk) c.data_equals_bk = true;
  if (o.m_min) c.m_min = *o.m_min;
  if (o.m_max) c.m_max = *o.m_max;
  c.validate();
  return c;
}

int run_table(const Overrides& o) {
  const auto config = make_config(o);
  const auto rows = fgpr::run_table(config);
  std::cout << fgpr::format_table(rows);
  for (const auto& r : rows)
    if (r.status != "ok") return 1;
  return 0;
}

int run_case(const Overrides& o) {
  auto config = make_config(o);
  if (!o.m && !config.data_csv) throw fgpr::InvalidInput("case needs --m or --data");
  std::filesystem::create_directories(config.out_dir);
  const auto obs = fgpr::observations_for(config, o.m.value_or(0));
  if (o.m && static_cast<std::size_t>(*o.m) != obs.points.size())
    throw fgpr::InvalidInput("--m does not match the number of points in the data file");
  const auto detail = fgpr::run_case(config, obs);
  const auto path = fgpr::points_path(config, detail.result.m);
  fgpr::write_file_atomic(path, fgpr::format_points(detail));
  std::cout << fgpr::format_table({detail.result});
  std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int run_verify() {
  int failed = 0;
  for (const auto& c : fgpr::run_verification()) {
    std::printf("%s  %-48s measured %.3e  threshold %.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                c.threshold);
    failed += c.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional Gaussian-process regression for a 1D Poisson model"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--elements", o.elements, "Uniform elements before observation points are inserted (2000)");
  app.add_option("--sigma", o.sigma, "Observation noise standard deviation (0)");
  app.add_option("--seed", o.seed, "Noise seed (0)");
  app.add_option("--out", o.out, "Output directory (.)");
  app.add_option("--config", o.config, "JSON config; flags override its values");
  app.add_option("--data", o.data, "CSV of x,d pairs used instead of synthetic observations");
  app.add_flag("--diag-only", o.diag_only, "Keep only posterior variances, not full covariances");
  app.add_flag("--data-equals-bk", o.data_equals_bk, "Debug: interior data equal the best-knowledge outputs");

  auto* table = app.add_subcommand("table", "Sweep over M and write table.csv");
  table->add_option("--m-min", o.m_min, "Smallest M (4)");
  table->add_option("--m-max", o.m_max, "Largest M (15)");
  auto* one = app.add_subcommand("case", "Run one M and write its points CSV");
  one->add_option("--m", o.m, "Number of observation points, endpoints included");
  auto* verify = app.add_subcommand("verify", "Run oracle equivalence checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*table) return run_table(o);
    if (*one) return run_case(o);
    if (*verify) return run_verify();
  } catch (const fgpr::InvalidInput& e) {
    std::cerr << "fgpr: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fgpr: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

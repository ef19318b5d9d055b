#include "fgpr/verify.hpp"

#include <algorithm>
#include <random>

#include "fgpr/covariance.hpp"
#include "fgpr/fem1d.hpp"
#include "fgpr/fgp.hpp"
#include "fgpr/hyperopt.hpp"
#include "fgpr/oracles.hpp"
#include "fgpr/problem.hpp"

namespace fgpr {

namespace {

struct Setup {
  std::vector<double> interior;
  ObservationSet<double> obs;
  FeSpace<double> space;
  BkModel<double> model;
  Vector<double> outputs;
  AdjointSet<double> adjoints;
  Vector<double> residual;
};

Setup make_setup(int n_elements, int m, double sigma, std::uint64_t seed) {
  const auto points = chebyshev_points<double>(m);
  auto obs = synthesize_observations<double>(points, sigma, seed);
  std::vector<double> interior(points.begin() + 1, points.end() - 1);
  auto space = assemble(build_mesh<double>(n_elements, interior));
  auto model = make_bk_model(space, interpolate(space, [](double x) { return bk_source(x); }), obs.data(0),
                             obs.data(m - 1));
  auto bk = solve_bk(model, std::span<const double>(interior));
  auto adjoints = solve_adjoints(space, std::span<const double>(interior));
  Vector<double> residual = obs.data.segment(1, m - 2) - bk.outputs;
  return Setup{std::move(interior), std::move(obs),      std::move(space),   std::move(model),
               std::move(bk.outputs), std::move(adjoints), std::move(residual)};
}

}  // namespace

KernelTrickReport check_kernel_trick(int n_elements, int m, double sigma) {
  const Setup s = make_setup(n_elements, m, sigma, 0);
  const CovOperator<double> op(s.space, 0.5, 0.1);
  const FgpFit<double> f = fit(op, s.adjoints, s.residual, sigma);
  const FunctionalPosterior<double> fp = posterior_functional(op, s.adjoints, f);

  const Index ni = s.space.n_interior();
  Matrix<double> tests = Matrix<double>::Zero(s.space.n_dof(), ni);
  tests.middleRows(1, ni).setIdentity();
  const Vector<double> kern_mean = fp.gbar.segment(1, ni);
  const Vector<double> kern_var = fp.cov_g.diagonal().segment(1, ni);

  const auto full = weight_space_predict(eigenbasis(op, ni), s.adjoints, s.residual, sigma, tests);
  const auto trunc = weight_space_predict(eigenbasis(op, std::max<Index>(1, ni / 2)), s.adjoints, s.residual, sigma, tests);

  KernelTrickReport r;
  r.n_test = static_cast<int>(ni);
  const double mean_scale = kern_mean.cwiseAbs().maxCoeff();
  const double var_scale = kern_var.cwiseAbs().maxCoeff();
  r.mean_rel_err = (full.means - kern_mean).cwiseAbs().maxCoeff() / mean_scale;
  r.var_rel_err = (full.variances - kern_var).cwiseAbs().maxCoeff() / var_scale;
  r.truncated_excess = (trunc.variances - full.variances).maxCoeff();
  return r;
}

KktReport check_kkt(int m, double sigma, int n_elements, std::uint64_t seed) {
  const Setup s = make_setup(n_elements, m, sigma, seed);
  const auto opt = optimize(functional_lml_problem(s.adjoints, s.residual, sigma));
  const CovOperator<double> op(s.space, opt.theta_star(0), opt.theta_star(1));
  const FgpFit<double> f = fit(op, s.adjoints, s.residual, sigma);
  const auto post = posterior_state(s.model, posterior_functional(op, s.adjoints, f), std::span<const double>(s.interior),
                                    CovarianceMode::DiagonalOnly);

  const Vector<double> d_interior = s.obs.data.segment(1, m - 2);
  const auto kkt = kkt_solve(s.model, op, s.adjoints, d_interior, sigma);
  const auto res = kkt_residuals(s.model, op, s.adjoints, d_interior, sigma, kkt);

  KktReport r;
  r.m = m;
  r.sigma = sigma;
  r.theta1 = op.theta1();
  r.theta2 = op.theta2();
  r.mean_l2_diff = l2_norm(s.space, Vector<double>(kkt.u.coeffs - post.mean_nodal));
  r.beta_rel_diff = (kkt.beta - f.beta).norm() / f.beta.norm();
  r.max_stationarity = *std::max_element(res.begin(), res.end());
  return r;
}

AdjointReport check_adjoint_identity(int n_elements, int m, std::uint64_t seed) {
  const Setup s = make_setup(n_elements, m, 0.0, 0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> r(s.space.n_dof());
  for (Index i = 0; i < r.size(); ++i) r(i) = normal(rng);
  // g(v) = int r v
  const Vector<double> g = s.space.mass() * r;

  const auto u_star = solve_dirichlet(s.space, Vector<double>(s.model.load - g), s.model.b_left, s.model.b_right);
  Vector<double> lhs(s.adjoints.size()), rhs(s.adjoints.size());
  for (Index i = 0; i < s.adjoints.size(); ++i) {
    lhs(i) = g.dot(s.adjoints.coeffs.col(i));
    rhs(i) = u_star.coeffs(s.adjoints.nodes[static_cast<std::size_t>(i)]) - s.outputs(i);
  }
  return AdjointReport{(lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff()};
}

std::vector<CheckResult> run_verification() {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double measured, double threshold) {
    out.push_back({std::move(name), measured, threshold, measured <= threshold});
  };

  const auto kt = check_kernel_trick();
  add("kernel trick: predictive mean", kt.mean_rel_err, 1e-8);
  add("kernel trick: predictive variance", kt.var_rel_err, 1e-8);
  add("kernel trick: truncated variance <= full", kt.truncated_excess, 1e-10);

  for (int m : {4, 8, 12}) {
    for (double sigma : {0.0, 1e-3}) {
      const auto k = check_kkt(m, sigma);
      const std::string tag = "KKT M=" + std::to_string(m) + (sigma > 0 ? " sigma=1e-3" : " sigma=0");
      add(tag + ": mean state L2 difference", k.mean_l2_diff, 1e-9);
      add(tag + ": beta relative difference", k.beta_rel_diff, 1e-9);
      add(tag + ": stationarity residual", k.max_stationarity, 1e-8);
    }
  }

  add("adjoint identity", check_adjoint_identity().rel_err, 1e-10);
  return out;
}

}  // namespace fgpr

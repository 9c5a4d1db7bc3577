#include "popfj/fjsys.hpp"

#include <cmath>
#include <stdexcept>

#include "popfj/sdp.hpp"

namespace popfj {

namespace {

std::vector<std::string> extend_vars(const PopProblem& prob) {
  std::vector<std::string> ext = prob.vars();
  ext.push_back("lam0");
  for (int j = 1; j <= prob.n_constraints(); ++j) ext.push_back("lam" + std::to_string(j));
  return ext;
}

FjSystem build_system(const PopProblem& prob, FjFlavor flavor) {
  FjSystem sys;
  sys.flavor = flavor;
  sys.n = prob.n_vars();
  sys.m = prob.n_constraints();
  sys.ext_vars = extend_vars(prob);

  const auto& ev = sys.ext_vars;
  sys.f_ext = lift(prob.f, ev);
  for (const auto& gj : prob.g) sys.g_ext.push_back(lift(gj, ev));

  auto lam = [&](int j) { return Polynomial::variable(sys.n + j, ev); };
  auto lam_weight = [&](int j) {
    Polynomial l = lam(j);
    return flavor == FjFlavor::FJ_PLUS ? multiply(l, l) : l;
  };

  for (int i = 0; i < sys.n; ++i) {
    Polynomial hi = multiply(lam_weight(0), lift(partial_derivative(prob.f, i), ev));
    for (int j = 0; j < sys.m; ++j)
      hi = sub(hi, multiply(lam_weight(j + 1), lift(partial_derivative(prob.g[j], i), ev)));
    sys.h.push_back(hi);
  }
  for (int j = 0; j < sys.m; ++j) sys.h.push_back(multiply(lam_weight(j + 1), sys.g_ext[j]));

  Polynomial norm = Polynomial::constant(1.0, ev);
  for (int j = 0; j <= sys.m; ++j) norm = sub(norm, multiply(lam(j), lam(j)));
  sys.h.push_back(norm);
  return sys;
}

}  // namespace

FjSystem build_fj_system(const PopProblem& prob) { return build_system(prob, FjFlavor::FJ); }

FjSystem build_fj_plus_system(const PopProblem& prob) {
  return build_system(prob, FjFlavor::FJ_PLUS);
}

std::vector<Polynomial> products_preordering(const std::vector<Polynomial>& g) {
  const int m = static_cast<int>(g.size());
  if (m > 20) throw std::invalid_argument("products_preordering: too many constraints");
  std::vector<Polynomial> out;
  if (m == 0) return out;
  const std::vector<std::string>& vars = g[0].vars();
  for (unsigned long mask = 1; mask < (1ul << m); ++mask) {
    Polynomial p = Polynomial::constant(1.0, vars);
    for (int j = 0; j < m; ++j)
      if (mask & (1ul << j)) p = multiply(p, g[j]);
    out.push_back(p);
  }
  return out;
}

Eigen::MatrixXd critical_matrix(const PopProblem& prob, const std::vector<double>& x) {
  const int n = prob.n_vars();
  const int m = prob.n_constraints();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) M(i, j) = evaluate(partial_derivative(prob.g[j], i), x);
    M(n + j, j) = evaluate(prob.g[j], x);
  }
  return M;
}

CriticalResult is_critical(const PopProblem& prob, const std::vector<double>& x, double tol) {
  CriticalResult res;
  const int m = prob.n_constraints();
  if (m == 0) return res;
  Eigen::MatrixXd M = critical_matrix(prob, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  res.smallest_singular_value = smin;
  if (smin < tol * std::max(1.0, smax)) {
    res.critical = true;
    res.witness = svd.matrixV().col(sv.size() - 1);
  }
  return res;
}

CriticalResult is_critical_plus(const PopProblem& prob, const std::vector<double>& x,
                                double tol) {
  CriticalResult res;
  const int n = prob.n_vars();
  const int m = prob.n_constraints();
  if (m == 0) return res;

  // lambda >= 0, sum lambda = 1, sum lambda_j grad g_j(x) = 0, lambda_j g_j(x) = 0
  std::vector<SdpProblem::Entry> coeffs;
  std::vector<double> rhs;
  for (int j = 0; j < m; ++j) coeffs.push_back({0, j, 1.0});
  rhs.push_back(1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double v = evaluate(partial_derivative(prob.g[j], i), x);
      if (v != 0.0) coeffs.push_back({1 + i, j, v});
    }
    rhs.push_back(0.0);
  }
  for (int j = 0; j < m; ++j) {
    double v = evaluate(prob.g[j], x);
    if (v != 0.0) coeffs.push_back({1 + n + j, j, v});
    rhs.push_back(0.0);
  }

  SolverConfig cfg;
  cfg.feas_tol = std::min(tol, 1e-8);
  cfg.gap_tol = cfg.feas_tol;
  LpFeasibility lp = solve_lp_feasibility(coeffs, 1 + n + m, m, rhs, cfg);
  res.critical = lp.feasible && lp.violation <= std::max(tol, 1e-7);
  if (res.critical) res.witness = lp.x;
  return res;
}

double variety_residual(const FjSystem& sys, const std::vector<double>& point) {
  double r = 0.0;
  for (const auto& ht : sys.h) r = std::max(r, std::fabs(evaluate(ht, point)));
  return r;
}

}  // namespace popfj

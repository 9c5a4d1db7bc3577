#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "popfj/polyring.hpp"

namespace popfj {

// min f(x) subject to g_j(x) >= 0.
struct PopProblem {
  std::string name;
  Polynomial f;
  std::vector<Polynomial> g;

  const std::vector<std::string>& vars() const { return f.vars(); }
  int n_vars() const { return f.n_vars(); }
  int n_constraints() const { return static_cast<int>(g.size()); }
};

enum class FjFlavor { FJ, FJ_PLUS };

// First-order system over the extended variables (x_1..x_n, lam_0..lam_m):
//   rows 0..n-1 : multiplier-weighted stationarity of the Lagrangian
//   rows n..n+m-1 : complementarity lam_j g_j  (lam_j^2 g_j for the plus flavor)
//   last row    : 1 - sum_j lam_j^2
// The plus flavor squares every multiplier occurrence except the normalization,
// which restricts the system to the nonnegative-multiplier branch.
struct FjSystem {
  FjFlavor flavor = FjFlavor::FJ;
  int n = 0;  // original variables
  int m = 0;  // constraints
  std::vector<std::string> ext_vars;
  std::vector<Polynomial> h;       // n + m + 1 equations over ext_vars
  Polynomial f_ext;                // objective lifted to ext_vars
  std::vector<Polynomial> g_ext;   // constraints lifted to ext_vars
};

FjSystem build_fj_system(const PopProblem& prob);
FjSystem build_fj_plus_system(const PopProblem& prob);

// All 2^m - 1 nonempty products of the g_j, enumerated by the binary counter
// J = 1..2^m-1 (bit j set means g_j is a factor).
std::vector<Polynomial> products_preordering(const std::vector<Polynomial>& g);

// (n+m) x m matrix [grad g_1 .. grad g_m ; diag(g_1 .. g_m)] at x: column j
// stacks grad g_j(x) over g_j(x) e_j.
Eigen::MatrixXd critical_matrix(const PopProblem& prob, const std::vector<double>& x);

struct CriticalResult {
  bool critical = false;
  double smallest_singular_value = 0.0;
  Eigen::VectorXd witness;  // multiplier direction when critical
};

// x is critical for g when some nonzero lambda satisfies
// sum_j lambda_j grad g_j(x) = 0 and lambda_j g_j(x) = 0 for all j,
// i.e. critical_matrix has deficient column rank.
CriticalResult is_critical(const PopProblem& prob, const std::vector<double>& x,
                           double tol = 1e-8);

// Nonnegative variant: asks additionally for lambda >= 0 (normalized to
// sum lambda = 1), decided by a phase-1 feasibility program.
CriticalResult is_critical_plus(const PopProblem& prob, const std::vector<double>& x,
                                double tol = 1e-8);

// max_t |h_t(point)| over the system equations; point is over ext_vars.
double variety_residual(const FjSystem& sys, const std::vector<double>& point);

}  // namespace popfj

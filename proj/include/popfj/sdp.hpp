#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace popfj {

inline constexpr double kSqrt2 = 1.4142135623730951;

// Scaled upper-triangle column-major vectorization: entry (i,j), i<=j, lands at
// svec_index(i,j); off-diagonal entries carry weight sqrt(2) so that
// <A,B> = svec(A).dot(svec(B)).
inline int svec_dim(int d) { return d * (d + 1) / 2; }
inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

// Linear conic program in primal standard form:
//   minimize    sum_b <C_b, X_b> + c_nn . x_nn + c_free . x_free
//   subject to  A(X, x_nn, x_free) = b,   X_b psd,  x_nn >= 0,  x_free free.
// Columns are laid out as [svec(X_0), svec(X_1), ..., x_nn, x_free].
struct SdpProblem {
  std::vector<int> block_dims;
  int n_nonneg = 0;
  int n_free = 0;

  struct Entry {
    int row, col;
    double val;
  };
  std::vector<Entry> coeffs;  // sparse equality coefficients
  std::vector<double> rhs;
  std::vector<Entry> objective;  // sparse cost over the same column layout

  int n_rows() const { return static_cast<int>(rhs.size()); }
  int block_offset(int b) const;
  int nonneg_offset() const;
  int free_offset() const;
  int n_cols() const;
};

enum class SdpStatus { OPTIMAL, UNBOUNDED_OR_INFEASIBLE, MAX_ITER, NUMERICAL_FAILURE };

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::NUMERICAL_FAILURE;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd nonneg;
  Eigen::VectorXd free_vars;
  Eigen::VectorXd y;  // equality multipliers, one per original row
  int iterations = 0;
  double eq_residual = 0.0;   // max |A(x) - b| on the original data
  double min_block_eig = 0.0; // most negative eigenvalue across cone blocks
  double gap = 0.0;           // |primal - dual|
};

struct SolverConfig {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.98;
  int jobs = 0;        // 0 = library default thread count
  int verbose = 0;
  bool long_double_polish = false;  // rerun small refined problems in long double
};

SdpSolution solve(const SdpProblem& prob, const SolverConfig& cfg = {});

// Phase-1 feasibility for {x >= 0 : A x = b}: minimizes the l1 equality
// violation via slacks and reports a point when the optimum is ~0.
struct LpFeasibility {
  bool feasible = false;
  Eigen::VectorXd x;
  double violation = 0.0;
};
LpFeasibility solve_lp_feasibility(const std::vector<SdpProblem::Entry>& coeffs, int n_rows,
                                   int n_cols, const std::vector<double>& rhs,
                                   const SolverConfig& cfg = {});

// Plain-text dump, one coefficient quintuple (row, block, i, j, value) per
// line after the header; free variables are emitted as differences of two
// nonnegative columns so the dumped problem is self-contained.
void dump_sdpa(const SdpProblem& prob, std::ostream& os);

}  // namespace popfj

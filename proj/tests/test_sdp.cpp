#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "popfj/kernels.hpp"
#include "popfj/sdp.hpp"

using namespace popfj;

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Vec to_svec(const Mat& A) {
  Vec v(svec_dim(static_cast<int>(A.rows())));
  kernels::svec<double>(A, v);
  return v;
}

void add_matrix_row(SdpProblem& P, int row, const Mat& A, int block_col0) {
  Vec v = to_svec(A);
  for (int k = 0; k < v.size(); ++k)
    if (v[k] != 0.0) P.coeffs.push_back({row, block_col0 + k, v[k]});
}

// min <C,X> s.t. <A_i,X> = b_i over one psd block; optimum known by
// construction: X* = Q diag(x_+,0) Q', S* = Q diag(0,s_+) Q', C = S* + sum y_i A_i.
struct ReverseSdp {
  SdpProblem prob;
  double opt = 0.0;
};

ReverseSdp reverse_engineer(int d, int nrows, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.4, 2.0);
  Mat Z = Mat::NullaryExpr(d, d, [&] { return u(rng); });
  Eigen::HouseholderQR<Mat> qr(Z);
  Mat Q = qr.householderQ();
  int r = d / 2 + 1;  // rank of X*
  Vec dx = Vec::Zero(d), ds = Vec::Zero(d);
  for (int i = 0; i < r; ++i) dx[i] = pos(rng);
  for (int i = r; i < d; ++i) ds[i] = pos(rng);
  Mat X = Q * dx.asDiagonal() * Q.transpose();
  Mat S = Q * ds.asDiagonal() * Q.transpose();

  ReverseSdp out;
  out.prob.block_dims = {d};
  Mat C = S;
  for (int i = 0; i < nrows; ++i) {
    Mat A = Mat::NullaryExpr(d, d, [&] { return u(rng); });
    A = 0.5 * (A + A.transpose()).eval();  // eval: A aliases its own transpose
    double yi = u(rng);
    C += yi * A;
    add_matrix_row(out.prob, i, A, 0);
    out.prob.rhs.push_back((A * X).trace());
  }
  Vec cv = to_svec(C);
  for (int k = 0; k < cv.size(); ++k)
    if (cv[k] != 0.0) out.prob.objective.push_back({0, k, cv[k]});
  out.opt = (C * X).trace();
  return out;
}

}  // namespace

TEST_CASE("reverse-engineered optima are recovered within 1e-6") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 2 + trial % 4;                 // blocks up to 5x5
    int nrows = 1 + trial % (svec_dim(d)); // keep rows independent w.h.p.
    ReverseSdp rs = reverse_engineer(d, nrows, rng);
    SdpSolution sol = solve(rs.prob);
    REQUIRE(sol.status == SdpStatus::OPTIMAL);
    double scale = 1.0 + std::fabs(rs.opt);
    CHECK(std::fabs(sol.primal_objective - rs.opt) / scale < 1e-6);
    CHECK(std::fabs(sol.dual_objective - rs.opt) / scale < 1e-6);
  }
}

TEST_CASE("optimal exits satisfy the gap and feasibility contracts") {
  std::mt19937 rng(7);
  SolverConfig cfg;
  for (int trial = 0; trial < 8; ++trial) {
    ReverseSdp rs = reverse_engineer(3 + trial % 3, 2 + trial % 3, rng);
    SdpSolution sol = solve(rs.prob, cfg);
    REQUIRE(sol.status == SdpStatus::OPTIMAL);
    double binf = 0.0;
    for (double b : rs.prob.rhs) binf = std::max(binf, std::fabs(b));
    CHECK(sol.eq_residual <= cfg.feas_tol * (1.0 + binf));
    CHECK(sol.gap <= cfg.gap_tol *
                         (1.0 + std::fabs(sol.primal_objective) + std::fabs(sol.dual_objective)));
    CHECK(sol.min_block_eig >= -cfg.feas_tol);
  }
}

TEST_CASE("scaling the objective scales both reported values") {
  std::mt19937 rng(33);
  ReverseSdp rs = reverse_engineer(4, 3, rng);
  SdpSolution base = solve(rs.prob);
  REQUIRE(base.status == SdpStatus::OPTIMAL);
  const double c = 3.7;
  SdpProblem scaled = rs.prob;
  for (auto& e : scaled.objective) e.val *= c;
  SdpSolution sol = solve(scaled);
  REQUIRE(sol.status == base.status);
  double scale = 1.0 + std::fabs(c * base.primal_objective);
  CHECK(std::fabs(sol.primal_objective - c * base.primal_objective) / scale < 1e-6);
  CHECK(std::fabs(sol.dual_objective - c * base.dual_objective) / scale < 1e-6);
}

TEST_CASE("free variables are eliminated and recovered") {
  // min x11 subject to x11 - u = 0, u = 3  (X is a 1x1 psd block, u free)
  SdpProblem P;
  P.block_dims = {1};
  P.n_free = 1;
  P.coeffs.push_back({0, 0, 1.0});
  P.coeffs.push_back({0, 1, -1.0});
  P.rhs.push_back(0.0);
  P.coeffs.push_back({1, 1, 1.0});
  P.rhs.push_back(3.0);
  P.objective.push_back({0, 0, 1.0});
  SdpSolution sol = solve(P);
  REQUIRE(sol.status == SdpStatus::OPTIMAL);
  CHECK(sol.primal_objective == doctest::Approx(3.0).epsilon(1e-7));
  REQUIRE(sol.free_vars.size() == 1);
  CHECK(sol.free_vars[0] == doctest::Approx(3.0).epsilon(1e-7));
  REQUIRE(sol.y.size() == 2);

  // a free variable in the objective with no constraint pinning it: unbounded
  SdpProblem Q;
  Q.block_dims = {1};
  Q.n_free = 1;
  Q.coeffs.push_back({0, 0, 1.0});
  Q.rhs.push_back(1.0);
  Q.objective.push_back({0, 1, 1.0});
  SdpSolution unb = solve(Q);
  CHECK(unb.status == SdpStatus::UNBOUNDED_OR_INFEASIBLE);
}

TEST_CASE("constraint-free problems short-circuit on the sign of the cost") {
  SdpProblem P;  // min x11, x11 >= 0
  P.block_dims = {1};
  P.objective.push_back({0, 0, 1.0});
  SdpSolution sol = solve(P);
  CHECK(sol.status == SdpStatus::OPTIMAL);
  CHECK(sol.primal_objective == doctest::Approx(0.0));

  SdpProblem N;  // min -x11, x11 >= 0: unbounded below
  N.block_dims = {1};
  N.objective.push_back({0, 0, -1.0});
  SdpSolution neg = solve(N);
  CHECK(neg.status == SdpStatus::UNBOUNDED_OR_INFEASIBLE);
}

TEST_CASE("primal infeasibility is flagged") {
  SdpProblem P;  // x11 = -1 with x11 >= 0
  P.block_dims = {1};
  P.coeffs.push_back({0, 0, 1.0});
  P.rhs.push_back(-1.0);
  P.objective.push_back({0, 0, 1.0});
  SdpSolution sol = solve(P);
  CHECK(sol.status == SdpStatus::UNBOUNDED_OR_INFEASIBLE);
}

TEST_CASE("nonnegative columns participate like 1x1 blocks") {
  // min x + 2z s.t. x + z = 1, x,z >= 0 -> optimum 1 at (1,0)
  SdpProblem P;
  P.n_nonneg = 2;
  P.coeffs.push_back({0, 0, 1.0});
  P.coeffs.push_back({0, 1, 1.0});
  P.rhs.push_back(1.0);
  P.objective.push_back({0, 0, 1.0});
  P.objective.push_back({0, 1, 2.0});
  SdpSolution sol = solve(P);
  REQUIRE(sol.status == SdpStatus::OPTIMAL);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.nonneg[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.nonneg[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("phase-1 feasibility distinguishes feasible from infeasible systems") {
  using E = SdpProblem::Entry;
  std::vector<E> c1 = {{0, 0, 1.0}, {0, 1, 1.0}};
  LpFeasibility f1 = solve_lp_feasibility(c1, 1, 2, {1.0});
  CHECK(f1.feasible);
  CHECK(f1.x.size() == 2);
  CHECK(f1.x[0] + f1.x[1] == doctest::Approx(1.0).epsilon(1e-5));

  LpFeasibility f2 = solve_lp_feasibility(c1, 1, 2, {-1.0});
  CHECK_FALSE(f2.feasible);

  std::vector<E> c3 = {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  LpFeasibility f3 = solve_lp_feasibility(c3, 2, 2, {0.0, 2.0});
  CHECK(f3.feasible);
  CHECK(f3.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(f3.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("long-double polish tightens a small optimum") {
  std::mt19937 rng(55);
  ReverseSdp rs = reverse_engineer(3, 2, rng);
  SolverConfig cfg;
  cfg.long_double_polish = true;
  SdpSolution sol = solve(rs.prob, cfg);
  REQUIRE(sol.status == SdpStatus::OPTIMAL);
  double scale = 1.0 + std::fabs(rs.opt);
  CHECK(std::fabs(sol.primal_objective - rs.opt) / scale < 1e-7);
}

TEST_CASE("plain-text dump carries the full problem") {
  std::mt19937 rng(77);
  ReverseSdp rs = reverse_engineer(2, 2, rng);
  std::ostringstream os;
  dump_sdpa(rs.prob, os);
  std::string text = os.str();
  CHECK(text.find("2") != std::string::npos);
  // one quintuple per nonzero coefficient, plus objective and header lines
  size_t lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines >= rs.prob.coeffs.size());
}

TEST_CASE("sparse Schur contribution matches the dense reference") {
  std::mt19937 rng(404);
  std::normal_distribution<double> N(0.0, 1.0);
  const int d = 7, sd = svec_dim(d), p = 23;

  std::vector<std::pair<int, int>> pos(sd);
  {
    int k = 0;
    for (int j = 0; j < d; ++j)
      for (int i = 0; i <= j; ++i, ++k) pos[k] = {i, j};
  }
  Mat rows = Mat::Zero(p, sd);
  kernels::SparseBlock<double> B;
  B.dim = d;
  B.p = p;
  B.rowptr.assign(p + 1, 0);
  std::uniform_int_distribution<int> Col(0, sd - 1);
  std::uniform_int_distribution<int> Cnt(0, 4);
  for (int r = 0; r < p; ++r) {
    B.rowptr[r + 1] = B.rowptr[r];
    int cnt = Cnt(rng);
    for (int t = 0; t < cnt; ++t) {
      int c = Col(rng);
      double v = N(rng);
      rows(r, c) += v;
      auto [i, j] = pos[c];
      B.ea.push_back(i);
      B.eb.push_back(j);
      B.sidx.push_back(c);
      B.sval.push_back(v);
      B.theta.push_back(i == j ? v / 2 : v / kSqrt2);
      B.rowptr[r + 1]++;
    }
  }
  Mat Z = Mat::NullaryExpr(d, d, [&] { return N(rng); });
  Mat S = Z * Z.transpose() + Mat::Identity(d, d) * double(d);
  Z = Mat::NullaryExpr(d, d, [&] { return N(rng); });
  Mat X = Z * Z.transpose() + Mat::Identity(d, d);
  Mat L = Eigen::LLT<Mat>(S).matrixL();
  Mat Sinv = S.inverse();

  Mat Md = Mat::Zero(p, p);
  kernels::schur_block_serial<double>(rows, L, X, Md);

  Mat Ms = Mat::Zero(p, p);
  kernels::schur_block_sparse_serial(B, Sinv, X, Ms);
  Ms.triangularView<Eigen::StrictlyLower>() =
      Ms.triangularView<Eigen::StrictlyUpper>().transpose();

  Mat Mo = Mat::Zero(p, p);
  kernels::schur_block_sparse_omp(B, Sinv, X, Mo, 4);
  Mo.triangularView<Eigen::StrictlyLower>() =
      Mo.triangularView<Eigen::StrictlyUpper>().transpose();

  double scale = 1.0 + Md.cwiseAbs().maxCoeff();
  CHECK((Md - Ms).cwiseAbs().maxCoeff() / scale < 1e-12);
  CHECK((Ms - Mo).cwiseAbs().maxCoeff() == 0.0);  // same summation order per row

  // adjoint/apply pair against the dense rows
  Vec xs = Vec::NullaryExpr(sd, [&] { return N(rng); });
  Vec t = Vec::NullaryExpr(p, [&] { return N(rng); });
  Vec a1 = Vec::Zero(p);
  kernels::sparse_apply_add(B, xs, a1);
  Vec a2 = rows * xs;
  CHECK((a1 - a2).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + a2.cwiseAbs().maxCoeff()));
  Vec w1 = Vec::Zero(sd);
  kernels::sparse_adjoint_add(B, t, w1);
  Vec w2 = rows.transpose() * t;
  CHECK((w1 - w2).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + w2.cwiseAbs().maxCoeff()));

  // row Gram used by the presolve rank filter
  Mat G = Mat::Zero(p, p);
  kernels::sparse_gram_add(B, G);
  G.triangularView<Eigen::StrictlyLower>() = G.triangularView<Eigen::StrictlyUpper>().transpose();
  Mat Gref = rows * rows.transpose();
  CHECK((G - Gref).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + Gref.cwiseAbs().maxCoeff()));
}

#include "popfj/sdp.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "popfj/kernels.hpp"

namespace popfj {

int SdpProblem::block_offset(int b) const {
  int off = 0;
  for (int i = 0; i < b; ++i) off += svec_dim(block_dims[i]);
  return off;
}

int SdpProblem::nonneg_offset() const {
  return block_offset(static_cast<int>(block_dims.size()));
}

int SdpProblem::free_offset() const { return nonneg_offset() + n_nonneg; }

int SdpProblem::n_cols() const { return free_offset() + n_free; }

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::OPTIMAL: return "OPTIMAL";
    case SdpStatus::UNBOUNDED_OR_INFEASIBLE: return "UNBOUNDED_OR_INFEASIBLE";
    case SdpStatus::MAX_ITER: return "MAX_ITER";
    case SdpStatus::NUMERICAL_FAILURE: return "NUMERICAL_FAILURE";
  }
  return "NUMERICAL_FAILURE";
}

namespace {

template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Pure-conic core problem: psd blocks only (scalars ride along as 1x1 blocks).
// Constraint rows live in the original (scaled) row space as sparse blocks;
// the reduced system seen by the interior-point loop is either a subset of
// those rows (kept) or a dense rotation of them (Zk, from free-variable
// elimination). All operator applications reduce through that map.
template <class T>
struct Core {
  std::vector<int> dims;
  std::vector<kernels::SparseBlock<T>> A;  // per block, rows indexed 0..p_orig
  std::vector<VecT<T>> C;                  // per block svec
  VecT<T> b;                               // reduced rhs
  int p_orig = 0;
  bool rotated = false;
  MatT<T> Zk;             // p_orig x p() when rotated
  std::vector<int> kept;  // reduced row i = original row kept[i] when !rotated

  int p() const { return static_cast<int>(b.size()); }

  VecT<T> reduce(const VecT<T>& t) const {
    if (rotated) return Zk.transpose() * t;
    VecT<T> out(p());
    for (int i = 0; i < p(); ++i) out[i] = t[kept[i]];
    return out;
  }
  VecT<T> expand(const VecT<T>& y) const {
    if (rotated) return Zk * y;
    VecT<T> t = VecT<T>::Zero(p_orig);
    for (int i = 0; i < p(); ++i) t[kept[i]] = y[i];
    return t;
  }
};

template <class T>
struct CoreOut {
  SdpStatus status = SdpStatus::MAX_ITER;
  std::vector<MatT<T>> X, S;
  VecT<T> y;
  int iterations = 0;
  T pobj = 0, dobj = 0;
};

template <class T>
T inf_norm(const MatT<T>& A) {
  return A.size() ? A.cwiseAbs().maxCoeff() : T(0);
}

template <class T>
VecT<T> apply_A(const Core<T>& pr, const std::vector<MatT<T>>& X) {
  VecT<T> t = VecT<T>::Zero(pr.p_orig);
  VecT<T> v;
  for (size_t b = 0; b < pr.dims.size(); ++b) {
    v.resize(svec_dim(pr.dims[b]));
    kernels::svec(X[b], v);
    kernels::sparse_apply_add(pr.A[b], v, t);
  }
  return pr.reduce(t);
}

template <class T>
void apply_At(const Core<T>& pr, const VecT<T>& y, std::vector<MatT<T>>& out) {
  VecT<T> t = pr.expand(y);
  VecT<T> v;
  for (size_t b = 0; b < pr.dims.size(); ++b) {
    v = VecT<T>::Zero(svec_dim(pr.dims[b]));
    kernels::sparse_adjoint_add(pr.A[b], t, v);
    out[b].resize(pr.dims[b], pr.dims[b]);
    kernels::smat(v, out[b]);
  }
}

// Largest step alpha <= 1 with X + alpha*D psd, via lambda_min of L^-1 D L^-T.
template <class T>
T max_step(const MatT<T>& X, const MatT<T>& D) {
  int d = X.rows();
  if (d == 0) return T(1);
  if (d == 1) {
    if (D(0, 0) >= 0) return T(1);
    return std::min(T(1), -X(0, 0) / D(0, 0));
  }
  Eigen::LLT<MatT<T>> llt(X);
  MatT<T> Xr = X;
  int tries = 0;
  while (llt.info() != Eigen::Success && tries < 3) {
    Xr += MatT<T>::Identity(d, d) * (std::numeric_limits<T>::epsilon() * (T(1) + Xr.trace()));
    llt.compute(Xr);
    ++tries;
  }
  if (llt.info() != Eigen::Success) return T(0);
  MatT<T> W = llt.matrixL().solve(D);
  W = llt.matrixL().solve(MatT<T>(W.transpose()));
  Eigen::SelfAdjointEigenSolver<MatT<T>> es(W, Eigen::EigenvaluesOnly);
  T lmin = es.eigenvalues()(0);
  if (lmin >= T(0)) return T(1);
  return std::min(T(1), -T(1) / lmin);
}

// Mehrotra predictor-corrector with a symmetrized S^-1..X scaling, ridge
// retries on the Schur factorization, a centering boost when feasibility lags
// the barrier, a step-collapse exit, and best-iterate tracking.
template <class T>
CoreOut<T> run_ipm(const Core<T>& pr, const SolverConfig& cfg) {
  const int p = pr.p();
  const int nb = static_cast<int>(pr.dims.size());
  CoreOut<T> out;

  T sumd = T(0), cinf = T(0);
  for (int b = 0; b < nb; ++b) {
    sumd += T(pr.dims[b]);
    if (pr.C[b].size()) cinf = std::max(cinf, pr.C[b].cwiseAbs().maxCoeff());
  }
  const T binf = p ? pr.b.cwiseAbs().maxCoeff() : T(0);
  const T ftol = T(cfg.feas_tol), gtol = T(cfg.gap_tol);

  std::vector<MatT<T>> X(nb), S(nb), Cmat(nb);
  for (int b = 0; b < nb; ++b) {
    int d = pr.dims[b];
    X[b] = MatT<T>::Identity(d, d) * std::max(T(1), binf);
    S[b] = MatT<T>::Identity(d, d) * std::max(T(1), cinf);
    Cmat[b].resize(d, d);
    kernels::smat(pr.C[b], Cmat[b]);
  }
  VecT<T> y = VecT<T>::Zero(p);

  std::vector<MatT<T>> bestX = X, bestS = S;
  VecT<T> besty = y;
  T best_score = std::numeric_limits<T>::max();
  T best_pobj = 0, best_dobj = 0;

  std::vector<Eigen::LLT<MatT<T>>> llt(nb);
  std::vector<MatT<T>> Aty(nb), Rd(nb), E(nb), Sinv(nb), dSa(nb), dXa(nb), Kc(nb), dS(nb), dX(nb);
  MatT<T> M(p, p), Mbig(pr.p_orig, pr.p_orig), tmp;
  VecT<T> sv, tcorr;
  int collapse = 0;

  auto sym_sinv_ux = [&](int b, const MatT<T>& U, const MatT<T>& Xb) {
    // sym(S^-1 U Xb)
    MatT<T> V = llt[b].matrixL().solve(U);
    llt[b].matrixL().transpose().solveInPlace(V);
    MatT<T> W = V * Xb;
    return MatT<T>(T(0.5) * (W + W.transpose()));
  };

  const T init_tr = [&] {
    T t = T(0);
    for (int b = 0; b < nb; ++b) t += X[b].trace();
    return std::max(T(1), t);
  }();
  const T init_trS = [&] {
    T t = T(0);
    for (int b = 0; b < nb; ++b) t += S[b].trace();
    return std::max(T(1), t);
  }();

  for (int it = 0; it < cfg.max_iter; ++it) {
    out.iterations = it;
    bool chol_ok = true;
    for (int b = 0; b < nb; ++b) {
      llt[b].compute(S[b]);
      if (llt[b].info() != Eigen::Success) {
        S[b] += MatT<T>::Identity(pr.dims[b], pr.dims[b]) *
                (T(1e-14) * (T(1) + S[b].trace()));
        llt[b].compute(S[b]);
        if (llt[b].info() != Eigen::Success) chol_ok = false;
      }
    }
    if (!chol_ok) {
      out.status = SdpStatus::NUMERICAL_FAILURE;
      break;
    }

    T mu = T(0), pobj = T(0);
    for (int b = 0; b < nb; ++b) {
      mu += X[b].cwiseProduct(S[b]).sum();
      pobj += Cmat[b].cwiseProduct(X[b]).sum();
    }
    mu /= std::max(T(1), sumd);
    T dobj = pr.b.dot(y);

    VecT<T> rp = pr.b - apply_A(pr, X);
    apply_At(pr, y, Aty);
    T rdinf = T(0);
    for (int b = 0; b < nb; ++b) {
      Rd[b] = Cmat[b] - S[b] - Aty[b];
      rdinf = std::max(rdinf, inf_norm(Rd[b]));
    }
    T rpinf = p ? rp.cwiseAbs().maxCoeff() : T(0);
    T pres = rpinf / (T(1) + binf);
    T dres = rdinf / (T(1) + cinf);
    T relgap = std::abs(pobj - dobj) / (T(1) + std::abs(pobj) + std::abs(dobj));

    if (!std::isfinite(static_cast<double>(mu)) ||
        !std::isfinite(static_cast<double>(pres))) {
      out.status = SdpStatus::NUMERICAL_FAILURE;
      break;
    }

    T score = std::max({pres, dres, relgap});
    if (score < best_score) {
      best_score = score;
      bestX = X;
      bestS = S;
      besty = y;
      best_pobj = pobj;
      best_dobj = dobj;
    }
    if (cfg.verbose >= 2)
      std::fprintf(stderr, "  it %3d  pobj % .9e  dobj % .9e  pres %.2e  dres %.2e  mu %.2e\n",
                   it, (double)pobj, (double)dobj, (double)pres, (double)dres, (double)mu);

    if (pres <= ftol && dres <= ftol && relgap <= gtol) {
      out.status = SdpStatus::OPTIMAL;
      break;
    }
    T trX = T(0), trS = T(0);
    for (int b = 0; b < nb; ++b) {
      trX += X[b].trace();
      trS += S[b].trace();
    }
    if (trX > T(1e14) * init_tr || std::abs(pobj) > T(1e15) || trS > T(1e14) * init_trS ||
        std::abs(dobj) > T(1e15)) {
      out.status = SdpStatus::UNBOUNDED_OR_INFEASIBLE;
      break;
    }

    for (int b = 0; b < nb; ++b) {
      E[b] = sym_sinv_ux(b, Rd[b], X[b]);
      Sinv[b] = llt[b].solve(MatT<T>::Identity(pr.dims[b], pr.dims[b]));
    }

    // Schur complement over original rows, then reduced: M(i,j) = sum_b tr(A_i S^-1 A_j X)
    Mbig.setZero();
    for (int b = 0; b < nb; ++b)
      kernels::schur_block_sparse(pr.A[b], Sinv[b], X[b], Mbig, cfg.jobs);
    Mbig.template triangularView<Eigen::StrictlyLower>() =
        Mbig.template triangularView<Eigen::StrictlyUpper>().transpose();
    if (pr.rotated) {
      tmp.noalias() = Mbig * pr.Zk;
      M.noalias() = pr.Zk.transpose() * tmp;
    } else {
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) M(i, j) = Mbig(pr.kept[i], pr.kept[j]);
    }

    Eigen::LLT<MatT<T>> Mf;
    T ridge = T(0);
    for (int attempt = 0;; ++attempt) {
      MatT<T> Mr = M;
      if (ridge > T(0)) Mr += MatT<T>::Identity(p, p) * ridge;
      Mf.compute(Mr);
      if (Mf.info() == Eigen::Success) break;
      if (attempt >= 4) {
        out.status = SdpStatus::NUMERICAL_FAILURE;
        break;
      }
      T mdiag = M.diagonal().cwiseAbs().maxCoeff();
      ridge = ridge == T(0) ? T(1e-12) * std::max(T(1), mdiag) : ridge * T(100);
    }
    if (Mf.info() != Eigen::Success) break;

    // predictor: dS = Rd - A'(dy), dX = -X - sym(S^-1 dS X)
    VecT<T> rhs = pr.b + apply_A(pr, E);
    VecT<T> dya = Mf.solve(rhs);
    apply_At(pr, dya, dSa);
    T mu_aff;
    {
      T ap = T(1), ad = T(1);
      for (int b = 0; b < nb; ++b) {
        dSa[b] = Rd[b] - dSa[b];
        dXa[b] = -X[b] - sym_sinv_ux(b, dSa[b], X[b]);
        ap = std::min(ap, max_step(X[b], dXa[b]));
        ad = std::min(ad, max_step(S[b], dSa[b]));
      }
      mu_aff = T(0);
      for (int b = 0; b < nb; ++b)
        mu_aff += (X[b] + ap * dXa[b]).cwiseProduct(S[b] + ad * dSa[b]).sum();
      mu_aff /= std::max(T(1), sumd);
    }
    T sig = mu > T(0) ? (mu_aff / mu) * (mu_aff / mu) * (mu_aff / mu) : T(0.5);
    sig = std::clamp(sig, T(0.05), T(0.99));
    if (std::max(rpinf, rdinf) > T(10) * mu) sig = std::max(sig, T(0.5));

    // corrector
    rhs = pr.b + apply_A(pr, E);
    tcorr = VecT<T>::Zero(pr.p_orig);
    for (int b = 0; b < nb; ++b) {
      Kc[b] = sym_sinv_ux(b, dSa[b], MatT<T>(dXa[b]));
      sv.resize(svec_dim(pr.dims[b]));
      MatT<T> piece = Kc[b] - sig * mu * Sinv[b];
      kernels::svec(piece, sv);
      kernels::sparse_apply_add(pr.A[b], sv, tcorr);
    }
    rhs.noalias() += pr.reduce(tcorr);
    VecT<T> dy = Mf.solve(rhs);
    apply_At(pr, dy, dS);
    T ap = T(1), ad = T(1);
    for (int b = 0; b < nb; ++b) {
      dS[b] = Rd[b] - dS[b];
      dX[b] = sig * mu * Sinv[b] - X[b] - sym_sinv_ux(b, dS[b], X[b]) - Kc[b];
      dX[b] = T(0.5) * (dX[b] + dX[b].transpose());
      ap = std::min(ap, max_step(X[b], dX[b]));
      ad = std::min(ad, max_step(S[b], dS[b]));
    }
    ap = std::min(T(1), T(cfg.step_fraction) * ap);
    ad = std::min(T(1), T(cfg.step_fraction) * ad);

    if (std::max(ap, ad) < T(1e-4)) {
      if (++collapse >= 3) {
        out.status = SdpStatus::MAX_ITER;
        break;
      }
    } else {
      collapse = 0;
    }

    for (int b = 0; b < nb; ++b) {
      X[b] += ap * dX[b];
      X[b] = T(0.5) * (X[b] + X[b].transpose());
      S[b] += ad * dS[b];
      S[b] = T(0.5) * (S[b] + S[b].transpose());
    }
    y += ad * dy;
  }

  out.X = std::move(bestX);
  out.S = std::move(bestS);
  out.y = std::move(besty);
  out.pobj = best_pobj;
  out.dobj = best_dobj;
  return out;
}

// Greedy pivoted Cholesky on a psd row Gram; returns the indices of the pivot
// rows accepted before the trailing diagonal drops below rel * (largest
// diagonal). The surviving rows are a well-conditioned row basis; the rest are
// numerically dependent on them.
template <class T>
std::vector<int> pivoted_chol_keep(MatT<T> G, T rel) {
  const int n = static_cast<int>(G.rows());
  if (n == 0) return {};
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  T d0 = G.diagonal().maxCoeff();
  if (!(d0 > T(0))) return {};
  const T thr = rel * d0;
  int t = 0;
  for (; t < n; ++t) {
    int jmax = t;
    T mx = G(t, t);
    for (int j = t + 1; j < n; ++j)
      if (G(j, j) > mx) {
        mx = G(j, j);
        jmax = j;
      }
    if (!(mx > thr)) break;
    if (jmax != t) {
      G.row(t).swap(G.row(jmax));
      G.col(t).swap(G.col(jmax));
      std::swap(perm[t], perm[jmax]);
    }
    const int m = n - t - 1;
    if (m > 0) {
      VecT<T> ell = G.col(t).tail(m) / std::sqrt(mx);
      G.bottomRightCorner(m, m).noalias() -= ell * ell.transpose();
    }
  }
  std::vector<int> kept(perm.begin(), perm.begin() + t);
  std::sort(kept.begin(), kept.end());
  return kept;
}

template <class T>
struct Presolved {
  Core<T> core;
  std::vector<int> dims_conic;   // declared blocks + one 1x1 per nonneg column
  std::vector<T> row_scale;
  VecT<T> bscaled;
  std::vector<SdpProblem::Entry> conicA;  // scaled, original row indices
  // free elimination
  int q = 0, rf = 0, p2 = 0;
  MatT<T> Q1, Q2, R11;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  VecT<T> w, bQ1;
  bool dual_bad = false;
  std::vector<int> kept;  // reduced rows kept by the rank filter
};

// Splits columns into conic/free, equilibrates rows, eliminates free columns
// through a column-pivoted QR (the first rank rows of the rotated system pin
// the free variables; the remainder is a pure conic program), then drops
// linearly dependent rows. Returns false when infeasibility is already
// decidable here.
template <class T>
bool presolve(const SdpProblem& prob, Presolved<T>& P, SdpStatus& early) {
  const int p = prob.n_rows();
  const int foff = prob.free_offset();
  P.q = prob.n_free;

  P.dims_conic.assign(prob.block_dims.begin(), prob.block_dims.end());
  for (int i = 0; i < prob.n_nonneg; ++i) P.dims_conic.push_back(1);
  const int nb = static_cast<int>(P.dims_conic.size());
  int ntot = 0;
  std::vector<int> conic_off(nb);
  for (int b = 0; b < nb; ++b) {
    conic_off[b] = ntot;
    ntot += svec_dim(P.dims_conic[b]);
  }

  std::vector<SdpProblem::Entry> freeA;
  P.conicA.clear();
  for (const auto& e : prob.coeffs) {
    if (e.col < foff)
      P.conicA.push_back(e);
    else
      freeA.push_back({e.row, e.col - foff, e.val});
  }

  // zero rows with nonzero rhs are flatly infeasible
  std::vector<char> row_has(p, 0);
  for (const auto& e : P.conicA)
    if (e.val != 0.0) row_has[e.row] = 1;
  for (const auto& e : freeA)
    if (e.val != 0.0) row_has[e.row] = 1;
  for (int r = 0; r < p; ++r)
    if (!row_has[r] && std::fabs(prob.rhs[r]) > 1e-12) {
      early = SdpStatus::UNBOUNDED_OR_INFEASIBLE;
      return false;
    }

  P.row_scale.assign(p, T(1));
  {
    std::vector<double> mx(p, 0.0);
    for (const auto& e : P.conicA) mx[e.row] = std::max(mx[e.row], std::fabs(e.val));
    for (const auto& e : freeA) mx[e.row] = std::max(mx[e.row], std::fabs(e.val));
    for (int r = 0; r < p; ++r) P.row_scale[r] = mx[r] > 0 ? T(mx[r]) : T(1);
  }
  P.bscaled.resize(p);
  for (int r = 0; r < p; ++r) P.bscaled[r] = T(prob.rhs[r]) / P.row_scale[r];
  for (auto& e : P.conicA) e.val /= static_cast<double>(P.row_scale[e.row]);

  auto blk_of = [&](int col) {
    return static_cast<int>(std::upper_bound(conic_off.begin(), conic_off.end(), col) -
                            conic_off.begin()) - 1;
  };

  // objective split
  std::vector<VecT<T>> Cp(nb);
  for (int b = 0; b < nb; ++b) Cp[b] = VecT<T>::Zero(svec_dim(P.dims_conic[b]));
  VecT<T> cf = VecT<T>::Zero(P.q);
  for (const auto& e : prob.objective) {
    if (e.col < foff) {
      int b = blk_of(e.col);
      Cp[b][e.col - conic_off[b]] += T(e.val);
    } else {
      cf[e.col - foff] += T(e.val);
    }
  }

  VecT<T> b2;
  if (P.q > 0) {
    if (p > 12000)
      throw std::runtime_error("free-variable elimination: too many rows to rotate densely");
    MatT<T> Fm = MatT<T>::Zero(p, P.q);
    for (const auto& e : freeA) Fm(e.row, e.col) += T(e.val) / P.row_scale[e.row];
    Eigen::ColPivHouseholderQR<MatT<T>> qr(Fm);
    MatT<T> R = qr.matrixR().template triangularView<Eigen::Upper>();
    int rf = 0;
    if (R.rows() && R.cols()) {
      T d0 = std::abs(R(0, 0));
      T thr = std::max(T(1e-10) * d0, T(1e-13));
      int rmax = std::min<int>(p, P.q);
      while (rf < rmax && std::abs(R(rf, rf)) >= thr) ++rf;
    }
    P.rf = rf;
    MatT<T> Q = qr.householderQ();
    P.Q1 = Q.leftCols(rf);
    P.Q2 = Q.rightCols(p - rf);
    P.R11 = R.topLeftCorner(rf, rf);
    P.perm = qr.colsPermutation();
    VecT<T> ctil = P.perm.transpose() * cf;
    P.w = P.R11.template triangularView<Eigen::Upper>().transpose().solve(
        VecT<T>(ctil.head(rf)));
    if (P.q > rf) {
      VecT<T> res = R.topRightCorner(rf, P.q - rf).transpose() * P.w - ctil.tail(P.q - rf);
      T cinf = cf.size() ? cf.cwiseAbs().maxCoeff() : T(0);
      if (res.cwiseAbs().maxCoeff() > T(1e-8) * (T(1) + cinf)) P.dual_bad = true;
    }
    P.bQ1 = P.Q1.transpose() * P.bscaled;
    b2 = P.Q2.transpose() * P.bscaled;
    // objective substitution C' = C - A^T (Q1 w)
    VecT<T> v = P.Q1 * P.w;
    for (const auto& e : P.conicA) {
      int b = blk_of(e.col);
      Cp[b][e.col - conic_off[b]] -= T(e.val) * v[e.row];
    }
  } else {
    P.rf = 0;
    b2 = P.bscaled;
  }
  P.p2 = static_cast<int>(b2.rows());

  // per-block sparse rows over the original scaled row space
  std::vector<kernels::SparseBlock<T>> SB(nb);
  {
    std::vector<std::vector<SdpProblem::Entry>> by_block(nb);
    for (const auto& e : P.conicA) by_block[blk_of(e.col)].push_back(e);
    for (int b = 0; b < nb; ++b) {
      const int d = P.dims_conic[b];
      std::vector<std::pair<int, int>> pos(svec_dim(d));
      {
        int k = 0;
        for (int j = 0; j < d; ++j)
          for (int i = 0; i <= j; ++i, ++k) pos[k] = {i, j};
      }
      auto& B = SB[b];
      B.dim = d;
      B.p = p;
      B.rowptr.assign(p + 1, 0);
      for (const auto& e : by_block[b]) B.rowptr[e.row + 1]++;
      for (int r = 0; r < p; ++r) B.rowptr[r + 1] += B.rowptr[r];
      const int ne = static_cast<int>(by_block[b].size());
      B.ea.resize(ne);
      B.eb.resize(ne);
      B.theta.resize(ne);
      B.sval.resize(ne);
      B.sidx.resize(ne);
      std::vector<int> fill(B.rowptr.begin(), B.rowptr.end() - 1);
      const T inv_sqrt2 = T(1) / std::sqrt(T(2));
      for (const auto& e : by_block[b]) {
        int u = fill[e.row]++;
        int lc = e.col - conic_off[b];
        auto [i, j] = pos[lc];
        B.ea[u] = i;
        B.eb[u] = j;
        B.sidx[u] = lc;
        B.sval[u] = T(e.val);
        B.theta[u] = (i == j) ? T(e.val) / T(2) : T(e.val) * inv_sqrt2;
      }
    }
  }

  // rank filter over the reduced rows: pivoted Cholesky of the row Gram
  P.kept.clear();
  if (P.p2 > 0) {
    MatT<T> M1 = MatT<T>::Zero(p, p);
    for (int b = 0; b < nb; ++b) kernels::sparse_gram_add(SB[b], M1);
    M1.template triangularView<Eigen::StrictlyLower>() =
        M1.template triangularView<Eigen::StrictlyUpper>().transpose();
    MatT<T> G;
    if (P.q > 0) {
      MatT<T> t;
      t.noalias() = M1 * P.Q2;
      G.noalias() = P.Q2.transpose() * t;
    } else {
      G = std::move(M1);
    }
    P.kept = pivoted_chol_keep(std::move(G), std::numeric_limits<T>::epsilon() * T(10));
  }

  P.core.dims = P.dims_conic;
  P.core.C = std::move(Cp);
  P.core.A = std::move(SB);
  P.core.p_orig = p;
  const int pk = static_cast<int>(P.kept.size());
  P.core.b.resize(pk);
  for (int i = 0; i < pk; ++i) P.core.b[i] = b2(P.kept[i]);
  if (P.q > 0) {
    P.core.rotated = true;
    P.core.Zk.resize(p, pk);
    for (int i = 0; i < pk; ++i) P.core.Zk.col(i) = P.Q2.col(P.kept[i]);
  } else {
    P.core.rotated = false;
    P.core.kept = P.kept;
  }
  return true;
}

template <class T>
SdpSolution solve_impl(const SdpProblem& prob, const SolverConfig& cfg) {
  SdpSolution sol;
  const int p = prob.n_rows();
  const int nblocks = static_cast<int>(prob.block_dims.size());

  Presolved<T> P;
  SdpStatus early = SdpStatus::NUMERICAL_FAILURE;
  if (!presolve(prob, P, early)) {
    sol.status = early;
    return sol;
  }
  if (P.dual_bad) {
    sol.status = SdpStatus::UNBOUNDED_OR_INFEASIBLE;
    return sol;
  }

  const int nb = static_cast<int>(P.dims_conic.size());
  CoreOut<T> co;
  if (P.kept.empty()) {
    // nothing constrains the cone variables: X = 0 is optimal iff C' is psd
    co.X.resize(nb);
    co.S.resize(nb);
    co.y = VecT<T>(0);
    co.status = SdpStatus::OPTIMAL;
    for (int b = 0; b < nb; ++b) {
      int d = P.dims_conic[b];
      co.X[b] = MatT<T>::Zero(d, d);
      MatT<T> Cb(d, d);
      kernels::smat(P.core.C[b], Cb);
      co.S[b] = Cb;
      if (d > 0) {
        Eigen::SelfAdjointEigenSolver<MatT<T>> es(Cb, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < T(-1e-9)) co.status = SdpStatus::UNBOUNDED_OR_INFEASIBLE;
      }
    }
  } else {
    co = run_ipm(P.core, cfg);
  }

  // conic vector over the original column layout
  const int foff = prob.free_offset();
  Eigen::VectorXd xconic = Eigen::VectorXd::Zero(foff);
  {
    int off = 0;
    VecT<T> v;
    for (int b = 0; b < nb; ++b) {
      int sd = svec_dim(P.dims_conic[b]);
      v.resize(sd);
      kernels::svec(co.X[b], v);
      for (int i = 0; i < sd; ++i) xconic[off + i] = static_cast<double>(v[i]);
      off += sd;
    }
  }

  // free recovery: R11 (P' x_f)_1 = Q1' b - Q1' A(x)
  Eigen::VectorXd xfree = Eigen::VectorXd::Zero(prob.n_free);
  if (P.q > 0 && P.rf > 0) {
    VecT<T> Ax = VecT<T>::Zero(p);
    for (const auto& e : P.conicA) Ax[e.row] += T(e.val) * T(xconic[e.col]);
    VecT<T> r1 = P.bQ1 - P.Q1.transpose() * Ax;
    VecT<T> xt = VecT<T>::Zero(P.q);
    xt.head(P.rf) = P.R11.template triangularView<Eigen::Upper>().solve(VecT<T>(r1));
    VecT<T> xf = P.perm * xt;
    for (int i = 0; i < P.q; ++i) xfree[i] = static_cast<double>(xf[i]);
  }

  // dual recovery y = Q [w; y_core] / row_scale
  sol.y = Eigen::VectorXd::Zero(p);
  {
    VecT<T> yt = VecT<T>::Zero(P.p2);
    for (size_t i = 0; i < P.kept.size(); ++i) yt[P.kept[i]] = co.y[i];
    VecT<T> ys;
    if (P.q > 0)
      ys = P.Q1 * P.w + P.Q2 * yt;
    else
      ys = yt;
    for (int r = 0; r < p; ++r) sol.y[r] = static_cast<double>(ys[r] / P.row_scale[r]);
  }

  sol.blocks.resize(nblocks);
  for (int b = 0; b < nblocks; ++b) sol.blocks[b] = co.X[b].template cast<double>();
  sol.nonneg.resize(prob.n_nonneg);
  for (int i = 0; i < prob.n_nonneg; ++i) sol.nonneg[i] = co.X[nblocks + i](0, 0);
  sol.free_vars = xfree;
  sol.iterations = co.iterations;

  // metrics on the original data
  Eigen::VectorXd xfull(prob.n_cols());
  xfull.head(foff) = xconic;
  xfull.tail(prob.n_free) = xfree;
  double pobj = 0.0;
  for (const auto& e : prob.objective) pobj += e.val * xfull[e.col];
  double dobj = 0.0;
  for (int r = 0; r < p; ++r) dobj += prob.rhs[r] * sol.y[r];
  Eigen::VectorXd resid = Eigen::VectorXd::Zero(p);
  for (const auto& e : prob.coeffs) resid[e.row] += e.val * xfull[e.col];
  double eqres = 0.0, binf = 0.0;
  for (int r = 0; r < p; ++r) {
    eqres = std::max(eqres, std::fabs(resid[r] - prob.rhs[r]));
    binf = std::max(binf, std::fabs(prob.rhs[r]));
  }
  double mineig = std::numeric_limits<double>::infinity();
  for (int b = 0; b < nblocks; ++b) {
    if (!sol.blocks[b].size()) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.blocks[b], Eigen::EigenvaluesOnly);
    mineig = std::min(mineig, es.eigenvalues()(0));
  }
  for (int i = 0; i < prob.n_nonneg; ++i) mineig = std::min(mineig, sol.nonneg[i]);
  if (!std::isfinite(mineig)) mineig = 0.0;

  sol.primal_objective = pobj;
  sol.dual_objective = dobj;
  sol.eq_residual = eqres;
  sol.min_block_eig = mineig;
  sol.gap = std::fabs(pobj - dobj);
  sol.status = co.status;
  if (sol.status == SdpStatus::OPTIMAL) {
    bool ok = eqres <= cfg.feas_tol * (1.0 + binf) &&
              sol.gap <= cfg.gap_tol * (1.0 + std::fabs(pobj) + std::fabs(dobj)) &&
              mineig >= -cfg.feas_tol;
    if (!ok) sol.status = SdpStatus::MAX_ITER;
  }
  return sol;
}

}  // namespace

SdpSolution solve(const SdpProblem& prob, const SolverConfig& cfg) {
  SdpSolution sol = solve_impl<double>(prob, cfg);
  if (sol.status == SdpStatus::OPTIMAL || !cfg.long_double_polish) return sol;
  int ntot = prob.free_offset();
  if (ntot > 12000 || prob.n_rows() > 2500) return sol;
  SdpSolution sl = solve_impl<long double>(prob, cfg);
  if (sl.status == SdpStatus::OPTIMAL) return sl;
  double a = std::max({sol.eq_residual, sol.gap, -sol.min_block_eig});
  double b = std::max({sl.eq_residual, sl.gap, -sl.min_block_eig});
  return b < a ? sl : sol;
}

LpFeasibility solve_lp_feasibility(const std::vector<SdpProblem::Entry>& coeffs, int n_rows,
                                   int n_cols, const std::vector<double>& rhs,
                                   const SolverConfig& cfg) {
  SdpProblem lp;
  lp.n_nonneg = n_cols + 2 * n_rows;
  lp.rhs = rhs;
  lp.coeffs = coeffs;
  for (int r = 0; r < n_rows; ++r) {
    lp.coeffs.push_back({r, n_cols + r, 1.0});
    lp.coeffs.push_back({r, n_cols + n_rows + r, -1.0});
  }
  for (int i = 0; i < 2 * n_rows; ++i) lp.objective.push_back({0, n_cols + i, 1.0});
  SolverConfig c = cfg;
  c.long_double_polish = false;
  SdpSolution sol = solve(lp, c);

  LpFeasibility out;
  double binf = 0.0;
  for (double v : rhs) binf = std::max(binf, std::fabs(v));
  out.x = sol.nonneg.head(n_cols).cwiseMax(0.0);
  // measure the violation of the candidate point itself
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(n_rows);
  for (const auto& e : coeffs) ax[e.row] += e.val * out.x[e.col];
  for (int r = 0; r < n_rows; ++r)
    out.violation = std::max(out.violation, std::fabs(ax[r] - rhs[r]));
  out.feasible = (sol.status == SdpStatus::OPTIMAL || sol.status == SdpStatus::MAX_ITER) &&
                 out.violation <= std::max(1e-7, 100 * cfg.feas_tol) * (1.0 + binf);
  return out;
}

void dump_sdpa(const SdpProblem& prob, std::ostream& os) {
  const int nb = static_cast<int>(prob.block_dims.size());
  const int diag = prob.n_nonneg + 2 * prob.n_free;  // free columns split as u - v
  const int nblk = nb + (diag > 0 ? 1 : 0);
  os << prob.n_rows() << "\n" << nblk << "\n";
  for (int b = 0; b < nb; ++b) os << prob.block_dims[b] << (b + 1 < nblk ? " " : "");
  if (diag > 0) os << (nb ? " " : "") << -diag;
  os << "\n";
  for (int r = 0; r < prob.n_rows(); ++r) os << prob.rhs[r] << (r + 1 < prob.n_rows() ? " " : "");
  os << "\n";

  auto emit = [&](int matno, int col, double val) {
    // locate the block holding this column
    int b = 0, off = 0;
    while (b < nb && col >= off + svec_dim(prob.block_dims[b])) {
      off += svec_dim(prob.block_dims[b]);
      ++b;
    }
    if (b < nb) {
      int k = col - off, j = 0;
      while (svec_dim(j + 1) <= k) ++j;
      int i = k - svec_dim(j);
      double v = i == j ? val : val / kSqrt2;
      os << matno << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << v << "\n";
      return;
    }
    int c = col - prob.nonneg_offset();
    if (c < prob.n_nonneg) {
      os << matno << " " << nb + 1 << " " << c + 1 << " " << c + 1 << " " << val << "\n";
      return;
    }
    int f = c - prob.n_nonneg;
    int pu = prob.n_nonneg + f + 1, pv = prob.n_nonneg + prob.n_free + f + 1;
    os << matno << " " << nb + 1 << " " << pu << " " << pu << " " << val << "\n";
    os << matno << " " << nb + 1 << " " << pv << " " << pv << " " << -val << "\n";
  };

  for (const auto& e : prob.objective) emit(0, e.col, e.val);
  for (const auto& e : prob.coeffs) emit(e.row + 1, e.col, e.val);
}

}  // namespace popfj

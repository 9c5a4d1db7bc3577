#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#ifdef POPFJ_HAVE_OPENMP
#include <omp.h>
#endif

namespace popfj::kernels {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

int hardware_jobs();
// Resolves a --jobs request: 0 = all hardware threads, otherwise the request.
int resolve_jobs(int jobs);

template <class T>
void smat(const Vec<T>& v, Mat<T>& A) {
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  int d = A.rows();
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i, ++k) {
      T x = (i == j) ? v[k] : v[k] * inv_sqrt2;
      A(i, j) = x;
      A(j, i) = x;
    }
}

template <class T>
void svec(const Mat<T>& A, Vec<T>& v) {
  const T sqrt2 = std::sqrt(T(2));
  int d = A.rows();
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i, ++k) v[k] = (i == j) ? A(i, j) : A(i, j) * sqrt2;
}

// Schur contribution of one psd block:
//   M(i,j) += tr( mat(rows.row(i)) * S^{-1} * mat(rows.row(j)) * X )
// where L is the lower Cholesky factor of S. Columns of M are independent, so
// the parallel variant splits on j; both orders are bitwise identical.
template <class T>
void schur_block_serial(const Mat<T>& rows, const Mat<T>& L, const Mat<T>& X, Mat<T>& M) {
  const int p = rows.rows();
  const int d = X.rows();
  Mat<T> Aj(d, d), U(d, d);
  Vec<T> w(rows.cols());
  for (int j = 0; j < p; ++j) {
    Vec<T> rj = rows.row(j);
    smat(rj, Aj);
    U = L.template triangularView<Eigen::Lower>().solve(Aj);
    L.transpose().template triangularView<Eigen::Upper>().solveInPlace(U);
    Aj.noalias() = U * X;  // reuse Aj as S^{-1} A_j X
    U = T(0.5) * (Aj + Aj.transpose());
    svec(U, w);
    M.col(j).head(j + 1).noalias() += rows.topRows(j + 1) * w;
  }
  M.template triangularView<Eigen::StrictlyLower>() =
      M.template triangularView<Eigen::StrictlyUpper>().transpose();
}

template <class T>
void schur_block_omp(const Mat<T>& rows, const Mat<T>& L, const Mat<T>& X, Mat<T>& M, int jobs) {
#ifdef POPFJ_HAVE_OPENMP
  const int p = rows.rows();
  const int d = X.rows();
#pragma omp parallel num_threads(resolve_jobs(jobs))
  {
    Mat<T> Aj(d, d), U(d, d);
    Vec<T> w(rows.cols());
#pragma omp for schedule(static)
    for (int j = 0; j < p; ++j) {
      Vec<T> rj = rows.row(j);
      smat(rj, Aj);
      U = L.template triangularView<Eigen::Lower>().solve(Aj);
      L.transpose().template triangularView<Eigen::Upper>().solveInPlace(U);
      Aj.noalias() = U * X;
      U = T(0.5) * (Aj + Aj.transpose());
      svec(U, w);
      M.col(j).head(j + 1).noalias() += rows.topRows(j + 1) * w;
    }
  }
  M.template triangularView<Eigen::StrictlyLower>() =
      M.template triangularView<Eigen::StrictlyUpper>().transpose();
#else
  (void)jobs;
  schur_block_serial(rows, L, X, M);
#endif
}

template <class T>
void schur_block(const Mat<T>& rows, const Mat<T>& L, const Mat<T>& X, Mat<T>& M, int jobs) {
  if (jobs == 1)
    schur_block_serial(rows, L, X, M);
  else
    schur_block_omp(rows, L, X, M, jobs);
}

// Constraint rows of one psd block stored sparsely, CSR over rows. Each entry
// is a matrix position (a <= b) carrying two coefficient forms: sval is the
// svec-space value (off-diagonal includes the sqrt(2) factor), theta is the
// coefficient of e_a e_b' + e_b e_a' in the constraint matrix itself.
template <class T>
struct SparseBlock {
  int dim = 0;
  int p = 0;
  std::vector<int> rowptr;  // p + 1
  std::vector<int> ea, eb;
  std::vector<T> theta, sval;
  std::vector<int> sidx;  // svec index of (a, b)
};

// out[r] += <A_r, X> accumulated from svec(X) of this block.
template <class T>
void sparse_apply_add(const SparseBlock<T>& B, const Vec<T>& xs, Vec<T>& out) {
  for (int r = 0; r < B.p; ++r) {
    T acc = T(0);
    for (int u = B.rowptr[r]; u < B.rowptr[r + 1]; ++u) acc += B.sval[u] * xs[B.sidx[u]];
    out[r] += acc;
  }
}

// ws += sum_r t[r] * svec(A_r) for this block.
template <class T>
void sparse_adjoint_add(const SparseBlock<T>& B, const Vec<T>& t, Vec<T>& ws) {
  for (int r = 0; r < B.p; ++r) {
    T c = t[r];
    if (c == T(0)) continue;
    for (int u = B.rowptr[r]; u < B.rowptr[r + 1]; ++u) ws[B.sidx[u]] += B.sval[u] * c;
  }
}

// M(r,s) += <A_r, A_s> over this block's rows, upper triangle only.
template <class T>
void sparse_gram_add(const SparseBlock<T>& B, Mat<T>& M) {
  int sd = B.dim * (B.dim + 1) / 2;
  std::vector<std::vector<std::pair<int, T>>> cols(sd);
  for (int r = 0; r < B.p; ++r)
    for (int u = B.rowptr[r]; u < B.rowptr[r + 1]; ++u)
      cols[B.sidx[u]].push_back({r, B.sval[u]});
  for (const auto& col : cols)
    for (size_t i = 0; i < col.size(); ++i)
      for (size_t j = i; j < col.size(); ++j) {
        auto [r, vr] = col[i];
        auto [s, vs] = col[j];
        if (r == s)
          M(r, r) += (i == j) ? vr * vs : 2 * vr * vs;  // both orderings hit the diagonal
        else if (r < s)
          M(r, s) += vr * vs;
        else
          M(s, r) += vr * vs;
      }
}

// Schur contribution of one sparse psd block, upper triangle:
//   M(r,s) += tr(A_r Sinv A_s X)
// expanded entrywise over the stored positions; rows own disjoint output rows,
// so the parallel split over r is bitwise identical to the serial order.
template <class T>
void schur_block_sparse_serial(const SparseBlock<T>& B, const Mat<T>& Sinv, const Mat<T>& X,
                               Mat<T>& M) {
  const int d = B.dim;
  const T* S = Sinv.data();
  const T* Xd = X.data();
  for (int r = 0; r < B.p; ++r) {
    const int r0 = B.rowptr[r], r1 = B.rowptr[r + 1];
    if (r0 == r1) continue;
    for (int s = r; s < B.p; ++s) {
      const int s0 = B.rowptr[s], s1 = B.rowptr[s + 1];
      if (s0 == s1) continue;
      T acc = T(0);
      for (int u = r0; u < r1; ++u) {
        const T* Sa = S + static_cast<std::ptrdiff_t>(B.ea[u]) * d;
        const T* Sb = S + static_cast<std::ptrdiff_t>(B.eb[u]) * d;
        const T* Xa = Xd + static_cast<std::ptrdiff_t>(B.ea[u]) * d;
        const T* Xb = Xd + static_cast<std::ptrdiff_t>(B.eb[u]) * d;
        T part = T(0);
        for (int v = s0; v < s1; ++v) {
          const int c = B.ea[v], e = B.eb[v];
          part += B.theta[v] * (Sb[c] * Xa[e] + Sb[e] * Xa[c] + Sa[c] * Xb[e] + Sa[e] * Xb[c]);
        }
        acc += B.theta[u] * part;
      }
      M(r, s) += acc;
    }
  }
}

template <class T>
void schur_block_sparse_omp(const SparseBlock<T>& B, const Mat<T>& Sinv, const Mat<T>& X,
                            Mat<T>& M, int jobs) {
#ifdef POPFJ_HAVE_OPENMP
  const int d = B.dim;
  const T* S = Sinv.data();
  const T* Xd = X.data();
#pragma omp parallel for schedule(dynamic, 8) num_threads(resolve_jobs(jobs))
  for (int r = 0; r < B.p; ++r) {
    const int r0 = B.rowptr[r], r1 = B.rowptr[r + 1];
    if (r0 == r1) continue;
    for (int s = r; s < B.p; ++s) {
      const int s0 = B.rowptr[s], s1 = B.rowptr[s + 1];
      if (s0 == s1) continue;
      T acc = T(0);
      for (int u = r0; u < r1; ++u) {
        const T* Sa = S + static_cast<std::ptrdiff_t>(B.ea[u]) * d;
        const T* Sb = S + static_cast<std::ptrdiff_t>(B.eb[u]) * d;
        const T* Xa = Xd + static_cast<std::ptrdiff_t>(B.ea[u]) * d;
        const T* Xb = Xd + static_cast<std::ptrdiff_t>(B.eb[u]) * d;
        T part = T(0);
        for (int v = s0; v < s1; ++v) {
          const int c = B.ea[v], e = B.eb[v];
          part += B.theta[v] * (Sb[c] * Xa[e] + Sb[e] * Xa[c] + Sa[c] * Xb[e] + Sa[e] * Xb[c]);
        }
        acc += B.theta[u] * part;
      }
      M(r, s) += acc;
    }
  }
#else
  (void)jobs;
  schur_block_sparse_serial(B, Sinv, X, M);
#endif
}

template <class T>
void schur_block_sparse(const SparseBlock<T>& B, const Mat<T>& Sinv, const Mat<T>& X, Mat<T>& M,
                        int jobs) {
  if (jobs == 1)
    schur_block_sparse_serial(B, Sinv, X, M);
  else
    schur_block_sparse_omp(B, Sinv, X, M, jobs);
}

// argmin of value(i) over i in [0, n); ties resolve to the lowest index, so
// serial and parallel scans agree exactly.
template <class F>
std::int64_t grid_argmin_serial(std::int64_t n, F&& value) {
  std::int64_t best = -1;
  double bv = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double v = value(i);
    if (best < 0 || v < bv) {
      best = i;
      bv = v;
    }
  }
  return best;
}

template <class F>
std::int64_t grid_argmin_omp(std::int64_t n, F&& value, int jobs) {
#ifdef POPFJ_HAVE_OPENMP
  int nt = resolve_jobs(jobs);
  std::vector<std::int64_t> bests(nt, -1);
  std::vector<double> bvs(nt, 0.0);
#pragma omp parallel num_threads(nt)
  {
    int t = omp_get_thread_num();
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double v = value(i);
      if (bests[t] < 0 || v < bvs[t] || (v == bvs[t] && i < bests[t])) {
        bests[t] = i;
        bvs[t] = v;
      }
    }
  }
  std::int64_t best = -1;
  double bv = 0.0;
  for (int t = 0; t < nt; ++t) {
    if (bests[t] < 0) continue;
    if (best < 0 || bvs[t] < bv || (bvs[t] == bv && bests[t] < best)) {
      best = bests[t];
      bv = bvs[t];
    }
  }
  return best;
#else
  (void)jobs;
  return grid_argmin_serial(n, value);
#endif
}

template <class F>
std::int64_t grid_argmin(std::int64_t n, F&& value, int jobs) {
  if (jobs == 1) return grid_argmin_serial(n, value);
  return grid_argmin_omp(n, value, jobs);
}

}  // namespace popfj::kernels

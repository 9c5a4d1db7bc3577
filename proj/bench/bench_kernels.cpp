// Microbenchmarks for the hot kernels: Schur contributions (dense and sparse
// constraint rows) and grid scans, each in the serial and OpenMP variant.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "popfj/kernels.hpp"

using popfj::kernels::Mat;
using popfj::kernels::SparseBlock;
using popfj::kernels::Vec;

namespace {

struct SchurData {
  Mat<double> rows, L, X, M;
  SparseBlock<double> sparse;
  Mat<double> Sinv;
};

// p constraint rows over a d x d block; each row touches `per_row` positions.
SchurData make_schur(int p, int d, int per_row) {
  std::mt19937 rng(42);
  std::normal_distribution<double> N(0.0, 1.0);
  const int sd = d * (d + 1) / 2;
  SchurData s;
  s.rows = Mat<double>::Zero(p, sd);
  s.sparse.dim = d;
  s.sparse.p = p;
  s.sparse.rowptr.assign(p + 1, 0);
  std::vector<std::pair<int, int>> pos(sd);
  {
    int k = 0;
    for (int j = 0; j < d; ++j)
      for (int i = 0; i <= j; ++i, ++k) pos[k] = {i, j};
  }
  std::uniform_int_distribution<int> Col(0, sd - 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int r = 0; r < p; ++r) {
    s.sparse.rowptr[r + 1] = s.sparse.rowptr[r];
    for (int t = 0; t < per_row; ++t) {
      int c = Col(rng);
      double v = N(rng);
      s.rows(r, c) += v;
      auto [i, j] = pos[c];
      s.sparse.ea.push_back(i);
      s.sparse.eb.push_back(j);
      s.sparse.sidx.push_back(c);
      s.sparse.sval.push_back(v);
      s.sparse.theta.push_back(i == j ? v / 2 : v * inv_sqrt2);
      s.sparse.rowptr[r + 1]++;
    }
  }
  Mat<double> B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = N(rng);
  Mat<double> S = B * B.transpose() + Mat<double>::Identity(d, d) * double(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = N(rng);
  s.X = B * B.transpose() + Mat<double>::Identity(d, d);
  s.L = Eigen::LLT<Mat<double>>(S).matrixL();
  s.Sinv = S.inverse();
  s.M = Mat<double>::Zero(p, p);
  return s;
}

void BM_schur_dense_serial(benchmark::State& state) {
  auto s = make_schur(int(state.range(0)), int(state.range(1)), 3);
  for (auto _ : state) {
    s.M.setZero();
    popfj::kernels::schur_block_serial(s.rows, s.L, s.X, s.M);
    benchmark::DoNotOptimize(s.M.data());
  }
}

void BM_schur_dense_omp(benchmark::State& state) {
  auto s = make_schur(int(state.range(0)), int(state.range(1)), 3);
  for (auto _ : state) {
    s.M.setZero();
    popfj::kernels::schur_block_omp(s.rows, s.L, s.X, s.M, 0);
    benchmark::DoNotOptimize(s.M.data());
  }
}

void BM_schur_sparse_serial(benchmark::State& state) {
  auto s = make_schur(int(state.range(0)), int(state.range(1)), 3);
  for (auto _ : state) {
    s.M.setZero();
    popfj::kernels::schur_block_sparse_serial(s.sparse, s.Sinv, s.X, s.M);
    benchmark::DoNotOptimize(s.M.data());
  }
}

void BM_schur_sparse_omp(benchmark::State& state) {
  auto s = make_schur(int(state.range(0)), int(state.range(1)), 3);
  for (auto _ : state) {
    s.M.setZero();
    popfj::kernels::schur_block_sparse_omp(s.sparse, s.Sinv, s.X, s.M, 0);
    benchmark::DoNotOptimize(s.M.data());
  }
}

double grid_value(std::int64_t i) {
  double x = double(i % 1000) * 0.01 - 5.0;
  double y = double(i / 1000) * 0.01 - 5.0;
  return (x * x - y) * (x * x - y) + 0.1 * (x + y) * (x + y) + std::sin(3 * x);
}

void BM_grid_serial(benchmark::State& state) {
  std::int64_t n = state.range(0);
  for (auto _ : state) {
    auto best = popfj::kernels::grid_argmin_serial(n, grid_value);
    benchmark::DoNotOptimize(best);
  }
}

void BM_grid_omp(benchmark::State& state) {
  std::int64_t n = state.range(0);
  for (auto _ : state) {
    auto best = popfj::kernels::grid_argmin_omp(n, grid_value, 0);
    benchmark::DoNotOptimize(best);
  }
}

}  // namespace

BENCHMARK(BM_schur_dense_serial)->Args({200, 28})->Args({561, 45})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_schur_dense_omp)->Args({200, 28})->Args({561, 45})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_schur_sparse_serial)
    ->Args({200, 28})
    ->Args({561, 45})
    ->Args({561, 153})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_schur_sparse_omp)
    ->Args({200, 28})
    ->Args({561, 45})
    ->Args({561, 153})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_serial)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_omp)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

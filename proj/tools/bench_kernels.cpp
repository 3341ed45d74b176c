// Serial reference kernels against their OpenMP versions on Cube-sized data.
//   ./bench_kernels --benchmark_filter=Spmv

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "specinit/datamatrix.hpp"
#include "specinit/kernels.hpp"
#include "specinit/synthgen.hpp"

using namespace specinit;

namespace {

// Connection Laplacian of a cube with side s and p_lc = 0.3.
const SparseSymMatrix& laplacian(int s) {
  static std::map<int, SparseSymMatrix> cache;
  auto it = cache.find(s);
  if (it == cache.end()) {
    CubeParams p;
    p.s = s;
    p.p_lc = 0.3;
    p.seed = 1;
    it = cache.emplace(s, rotation_connection_laplacian(generate_cube(p).graph)).first;
  }
  return it->second;
}

Matrix random_matrix(int rows, int cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = nd(rng);
  return m;
}

template <void (*Kernel)(const kernels::CsrView&, kernels::ConstVecRef, kernels::VecRef)>
void BM_Spmv(benchmark::State& state) {
  const SparseSymMatrix& a = laplacian(static_cast<int>(state.range(0)));
  const Vector x = random_matrix(a.dim(), 1);
  Vector y(a.dim());
  const auto csr = a.csr();
  for (auto _ : state) {
    Kernel(csr, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["nnz"] = static_cast<double>(csr.values.size());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(csr.values.size()));
}

template <void (*Kernel)(const Matrix&, kernels::ConstVecRef, kernels::VecRef)>
void BM_BlockDiag(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix blocks = random_matrix(3, 3 * n);
  const Vector x = random_matrix(3 * n, 1);
  Vector y(3 * n);
  for (auto _ : state) {
    Kernel(blocks, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <void (*Kernel)(const Matrix&, Matrix&)>
void BM_RoundBlocks(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix y = random_matrix(3, 3 * n);
  Matrix out;
  for (auto _ : state) {
    Kernel(y, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_Spmv<kernels::serial::spmv>)->Name("Spmv/serial")->Arg(10)->Arg(20)->Arg(30);
BENCHMARK(BM_Spmv<kernels::omp::spmv>)->Name("Spmv/omp")->Arg(10)->Arg(20)->Arg(30)->UseRealTime();
BENCHMARK(BM_BlockDiag<kernels::serial::block_diag_apply>)->Name("BlockDiag/serial")->Arg(1000)->Arg(27000);
BENCHMARK(BM_BlockDiag<kernels::omp::block_diag_apply>)->Name("BlockDiag/omp")->Arg(1000)->Arg(27000)->UseRealTime();
BENCHMARK(BM_RoundBlocks<kernels::serial::round_blocks>)->Name("RoundBlocks/serial")->Arg(1000)->Arg(27000);
BENCHMARK(BM_RoundBlocks<kernels::omp::round_blocks>)->Name("RoundBlocks/omp")->Arg(1000)->Arg(27000)->UseRealTime();

BENCHMARK_MAIN();

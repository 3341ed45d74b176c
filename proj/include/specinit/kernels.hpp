#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp` with the same
// signature. The OpenMP versions partition work by output row/block only, so
// each output element is produced by the same floating-point operation
// sequence as the serial reference: results are bitwise identical for any
// thread count.

#include <span>

#include <Eigen/Core>

namespace specinit::kernels {

/// Compressed-row view of a square sparse matrix (both triangles stored).
struct CsrView {
  int rows = 0;
  std::span<const int> outer;  // rows + 1 offsets
  std::span<const int> inner;  // column indices
  std::span<const double> values;
};

/// Index type for dense Eigen views used by the kernels.
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecRef = Eigen::Ref<Eigen::VectorXd>;

namespace serial {

/// y = A x
void spmv(const CsrView& a, ConstVecRef x, VecRef y);

/// y = blockdiag(B_1, ..., B_n) x where `blocks` is d x (d n) with B_i in
/// columns [d i, d i + d).
void block_diag_apply(const Eigen::MatrixXd& blocks, ConstVecRef x, VecRef y);

/// Replace each d x d block of the d x (d n) matrix `y` with its nearest
/// rotation, writing into `out`.
void round_blocks(const Eigen::MatrixXd& y, Eigen::MatrixXd& out);

}  // namespace serial

namespace omp {

void spmv(const CsrView& a, ConstVecRef x, VecRef y);
void block_diag_apply(const Eigen::MatrixXd& blocks, ConstVecRef x, VecRef y);
void round_blocks(const Eigen::MatrixXd& y, Eigen::MatrixXd& out);

/// Threads the OpenMP kernels will use (1 when built without OpenMP).
int max_threads();

}  // namespace omp

}  // namespace specinit::kernels

#include "specinit/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "specinit/spectral.hpp"

namespace specinit::kernels {

namespace {

inline double row_dot(const CsrView& a, int r, const ConstVecRef& x) {
  double acc = 0.0;
  for (int p = a.outer[r]; p < a.outer[r + 1]; ++p) acc += a.values[p] * x[a.inner[p]];
  return acc;
}

inline void block_apply(const Eigen::MatrixXd& blocks, int i, const ConstVecRef& x, VecRef& y) {
  const Eigen::Index d = blocks.rows();
  y.segment(i * d, d).noalias() = blocks.middleCols(i * d, d) * x.segment(i * d, d);
}

}  // namespace

namespace serial {

void spmv(const CsrView& a, ConstVecRef x, VecRef y) {
  for (int r = 0; r < a.rows; ++r) y[r] = row_dot(a, r, x);
}

void block_diag_apply(const Eigen::MatrixXd& blocks, ConstVecRef x, VecRef y) {
  const int n = static_cast<int>(blocks.cols() / blocks.rows());
  for (int i = 0; i < n; ++i) block_apply(blocks, i, x, y);
}

void round_blocks(const Eigen::MatrixXd& y, Eigen::MatrixXd& out) {
  const Eigen::Index d = y.rows();
  const int n = static_cast<int>(y.cols() / d);
  out.resize(d, y.cols());
  for (int i = 0; i < n; ++i) out.middleCols(i * d, d) = project_to_SOd(y.middleCols(i * d, d));
}

}  // namespace serial

namespace omp {

void spmv(const CsrView& a, ConstVecRef x, VecRef y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.rows; ++r) y[r] = row_dot(a, r, x);
}

void block_diag_apply(const Eigen::MatrixXd& blocks, ConstVecRef x, VecRef y) {
  const int n = static_cast<int>(blocks.cols() / blocks.rows());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) block_apply(blocks, i, x, y);
}

void round_blocks(const Eigen::MatrixXd& y, Eigen::MatrixXd& out) {
  const Eigen::Index d = y.rows();
  const int n = static_cast<int>(y.cols() / d);
  out.resize(d, y.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out.middleCols(i * d, d) = project_to_SOd(y.middleCols(i * d, d));
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace omp

}  // namespace specinit::kernels

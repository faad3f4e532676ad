#include "carnot/kernels.hpp"

namespace carnot::kernels {

namespace {
Exec g_default_exec = Exec::Parallel;
}

void set_threads(int threads) {
#ifdef CARNOT_HAVE_OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int max_threads() {
#ifdef CARNOT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Exec default_exec() { return g_default_exec; }
void set_default_exec(Exec exec) { g_default_exec = exec; }

void spmv_serial(const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(A.rows());
  const auto* outer = A.outerIndexPtr();
  const auto* inner = A.innerIndexPtr();
  const double* val = A.valuePtr();
  for (long long r = 0; r < A.rows(); ++r) {
    double acc = 0.0;
    for (long long k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
    y[r] = acc;
  }
}

void spmv_parallel(const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(A.rows());
  const auto* outer = A.outerIndexPtr();
  const auto* inner = A.innerIndexPtr();
  const double* val = A.valuePtr();
  const long long rows = A.rows();
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (long long k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
    y[r] = acc;
  }
}

void spmv(Exec exec, const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  if (exec == Exec::Parallel) {
    spmv_parallel(A, x, y);
  } else {
    spmv_serial(A, x, y);
  }
}

}  // namespace carnot::kernels

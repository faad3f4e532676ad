#pragma once

// Data-parallel point loops. Every loop body writes only its own output slot,
// so the OpenMP variant produces bitwise the same results as the serial
// reference; the serial versions stay in the tree as the test baseline.

#include <Eigen/SparseCore>

#include <cstddef>
#include <exception>
#include <vector>

#ifdef CARNOT_HAVE_OPENMP
#include <omp.h>
#endif

namespace carnot::kernels {

enum class Exec { Serial, Parallel };

/// 0 = library default (OpenMP runtime decides). Ignored without OpenMP.
void set_threads(int threads);
int max_threads();

/// Default execution mode used by library scans.
Exec default_exec();
void set_default_exec(Exec exec);

template <class Body>
void for_each_index_serial(std::size_t count, Body&& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

/// Exceptions thrown by a body are captured and the one with the lowest
/// index is rethrown after the loop, as the serial loop would have.
template <class Body>
void for_each_index_parallel(std::size_t count, Body&& body) {
#ifdef CARNOT_HAVE_OPENMP
  std::vector<std::exception_ptr> errors(count);
  bool anyError = false;
  const long long total = static_cast<long long>(count);
#pragma omp parallel for schedule(static) reduction(|| : anyError)
  for (long long i = 0; i < total; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      anyError = true;
    }
  }
  if (anyError) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
#else
  for_each_index_serial(count, body);
#endif
}

template <class Body>
void for_each_index(Exec exec, std::size_t count, Body&& body) {
  if (exec == Exec::Parallel) {
    for_each_index_parallel(count, body);
  } else {
    for_each_index_serial(count, body);
  }
}

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, long long>;

/// y = A x, row-major CSR sweep.
void spmv_serial(const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y);
void spmv_parallel(const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y);
void spmv(Exec exec, const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y);

}  // namespace carnot::kernels

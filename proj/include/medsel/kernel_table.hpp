#pragma once

// Function table shared by all kernel backends. Kept free of standard library
// templates so the ISA-specific translation units can include it safely.

#include <cstddef>

namespace medsel::kernels {

struct Table {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[m] += A[m x n] * x[n]
  void (*gemv_acc)(const double* a, std::size_t m, std::size_t n, const double* x, double* y);
  // y[n] += A[m x n]^T * x[m]
  void (*gemv_t_acc)(const double* a, std::size_t m, std::size_t n, const double* x, double* y);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);
  // squared L2 distance
  double (*sqdist)(const double* a, const double* b, std::size_t n);
};

}  // namespace medsel::kernels

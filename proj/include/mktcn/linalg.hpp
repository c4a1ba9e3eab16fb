#pragma once

#include <cstddef>

namespace mktcn {

// Dense double-precision kernels on row-major strided matrices. These back
// both Tensor::matmul and the convolution layers, so they are written for
// throughput: register-tiled inner loops the compiler can turn into FMA code.

// C(m x n) += A(m x k) * B(k x n)
void gemm_acc(double* c, const double* a, const double* b,
              std::size_t m, std::size_t k, std::size_t n,
              std::size_t ldc, std::size_t lda, std::size_t ldb);

// C(m x n) += A(m x k) * B(n x k)^T   (i.e. C[i][j] += dot(A[i], B[j]))
void gemm_abt_acc(double* c, const double* a, const double* b,
                  std::size_t m, std::size_t k, std::size_t n,
                  std::size_t ldc, std::size_t lda, std::size_t ldb);

}  // namespace mktcn

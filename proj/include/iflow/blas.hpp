#pragma once

namespace iflow::detail {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C. Thin shim over the
// BLAS backend so the templated graph code stays header-only.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc);

// Default is one thread: training results must be bitwise reproducible.
void set_blas_threads(int n);

} // namespace iflow::detail

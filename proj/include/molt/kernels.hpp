#pragma once

#include "molt/matrix.hpp"

// Dense inner loops. Every kernel exists twice: a serial reference under
// kernels::serial and an OpenMP version under kernels::omp that splits work
// across independent output rows. Each output element is accumulated by one
// thread in the same order the serial kernel uses, so both variants produce
// bitwise-identical results for any thread count. The dispatchers at
// namespace scope pick the OpenMP version for large enough problems.

namespace molt::kernels {

struct ExecConfig {
  bool parallel_enabled = true;
  // Minimum multiply count (m*k*n) before a matmul fans out.
  long long parallel_flop_threshold = 32768;
};

ExecConfig& exec_config();
void set_num_threads(int n);  // <=0 leaves the OpenMP default
int max_threads();

namespace serial {
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out);  // out = a * b
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);  // out = a * b^T
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);  // out = a^T * b
void softmax_rows(const Matrix& x, Matrix& out);
void tanh_map(const Matrix& x, Matrix& out);
}  // namespace serial

namespace omp {
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void softmax_rows(const Matrix& x, Matrix& out);
void tanh_map(const Matrix& x, Matrix& out);
}  // namespace omp

// Dispatchers. Shapes are validated here; the inner kernels assume them.
Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix softmax_rows(const Matrix& x);
Matrix tanh_map(const Matrix& x);

}  // namespace molt::kernels

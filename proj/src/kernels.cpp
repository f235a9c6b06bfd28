#include "molt/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace molt::kernels {

ExecConfig& exec_config() {
  static ExecConfig cfg;
  return cfg;
}

void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

bool use_parallel(long long flops) {
  const ExecConfig& cfg = exec_config();
  if (!cfg.parallel_enabled || flops < cfg.parallel_flop_threshold) return false;
#ifdef _OPENMP
  // Inside an enclosing parallel region (e.g. per-sample evaluation fan-out)
  // the kernels stay serial.
  return omp_in_parallel() == 0;
#else
  return false;
#endif
}

inline void matmul_nn_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  const int k = a.cols(), n = b.cols();
  double* orow = out.row(i);
  for (int j = 0; j < n; ++j) orow[j] = 0.0;
  const double* arow = a.row(i);
  for (int p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  const int k = a.cols(), n = b.rows();
  const double* arow = a.row(i);
  double* orow = out.row(i);
  for (int j = 0; j < n; ++j) {
    const double* brow = b.row(j);
    double s = 0.0;
    for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
    orow[j] = s;
  }
}

// Row r of a^T * b: sum over a's rows of a(m, r) * b(m, :).
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, int r) {
  const int m = a.rows(), n = b.cols();
  double* orow = out.row(r);
  for (int j = 0; j < n; ++j) orow[j] = 0.0;
  for (int p = 0; p < m; ++p) {
    const double av = a(p, r);
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
  }
}

inline void softmax_row(const Matrix& x, Matrix& out, int i) {
  const int n = x.cols();
  const double* xr = x.row(i);
  double* orow = out.row(i);
  double mx = xr[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    orow[j] = std::exp(xr[j] - mx);
    sum += orow[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < n; ++j) orow[j] *= inv;
}

}  // namespace

namespace serial {

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  for (int i = 0; i < a.rows(); ++i) matmul_nn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  for (int i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  for (int r = 0; r < a.cols(); ++r) matmul_tn_row(a, b, out, r);
}

void softmax_rows(const Matrix& x, Matrix& out) {
  for (int i = 0; i < x.rows(); ++i) softmax_row(x, out, i);
}

void tanh_map(const Matrix& x, Matrix& out) {
  const double* src = x.data();
  double* dst = out.data();
  for (size_t i = 0; i < x.size(); ++i) dst[i] = std::tanh(src[i]);
}

}  // namespace serial

namespace omp {

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) matmul_nn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.cols(); ++r) matmul_tn_row(a, b, out, r);
}

void softmax_rows(const Matrix& x, Matrix& out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.rows(); ++i) softmax_row(x, out, i);
}

void tanh_map(const Matrix& x, Matrix& out) {
  const double* src = x.data();
  double* dst = out.data();
  const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) dst[i] = std::tanh(src[i]);
}

}  // namespace omp

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  check_inner_dims(a, b, "matmul");
  Matrix out(a.rows(), b.cols());
  const long long flops = 1ll * a.rows() * a.cols() * b.cols();
  if (use_parallel(flops)) {
    omp::matmul_nn(a, b, out);
  } else {
    serial::matmul_nn(a, b, out);
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dims disagree, " + a.shape_str() + " vs " + b.shape_str() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  const long long flops = 1ll * a.rows() * a.cols() * b.rows();
  if (use_parallel(flops)) {
    omp::matmul_nt(a, b, out);
  } else {
    serial::matmul_nt(a, b, out);
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: inner dims disagree, " + a.shape_str() + "^T vs " + b.shape_str());
  }
  Matrix out(a.cols(), b.cols());
  const long long flops = 1ll * a.cols() * a.rows() * b.cols();
  if (use_parallel(flops)) {
    omp::matmul_tn(a, b, out);
  } else {
    serial::matmul_tn(a, b, out);
  }
  return out;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  if (use_parallel(4ll * x.rows() * x.cols())) {
    omp::softmax_rows(x, out);
  } else {
    serial::softmax_rows(x, out);
  }
  return out;
}

Matrix tanh_map(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  if (use_parallel(8ll * static_cast<long long>(x.size()))) {
    omp::tanh_map(x, out);
  } else {
    serial::tanh_map(x, out);
  }
  return out;
}

}  // namespace molt::kernels

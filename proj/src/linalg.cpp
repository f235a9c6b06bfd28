#include "molt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace molt {

namespace {

double max_asymmetry(const Matrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) m = std::max(m, std::fabs(a(i, j) - a(j, i)));
  return m;
}

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace

SymEig symmetric_eig(const Matrix& a, double sym_tol) {
  if (a.rows() != a.cols()) {
    throw ContractError("symmetric_eig: matrix must be square, got " + a.shape_str());
  }
  const double asym = max_asymmetry(a);
  if (asym > sym_tol) {
    throw ContractError("symmetric_eig: input not symmetric, |a - a^T|_inf = " + std::to_string(asym));
  }

  const int n = a.rows();
  Matrix work = a;
  // Re-symmetrize so tiny asymmetries within tolerance cannot bias sweeps.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (work(i, j) + work(j, i));
      work(i, j) = v;
      work(j, i) = v;
    }

  Matrix vec = Matrix::identity(n);
  const double scale = std::max(work.max_abs(), 1.0);
  const double stop = 1e-30 * scale * scale * n * n;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal_sq(work) <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = work(k, p), akq = work(k, q);
          work(k, p) = c * akp - s * akq;
          work(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = work(p, k), aqk = work(q, k);
          work(p, k) = c * apk - s * aqk;
          work(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vec(k, p), vkq = vec(k, q);
          vec(k, p) = c * vkp - s * vkq;
          vec(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEig out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = work(i, i);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return out.values[i] < out.values[j]; });

  SymEig sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (int i = 0; i < n; ++i) sorted.vectors(i, j) = vec(i, order[j]);
  }
  return sorted;
}

Matrix sym_matrix_power(const Matrix& a, double power, double eig_floor, double sym_tol) {
  const SymEig eig = symmetric_eig(a, sym_tol);
  const int n = a.rows();
  std::vector<double> pw(n);
  for (int i = 0; i < n; ++i) pw[i] = std::pow(std::max(eig.values[i], eig_floor), power);

  // U diag(pw) U^T
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += eig.vectors(i, k) * pw[k] * eig.vectors(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

Matrix matrix_inv_sqrt(const Matrix& a, double ridge) {
  if (ridge < 0.0) throw ContractError("matrix_inv_sqrt: ridge must be >= 0");
  Matrix shifted = a;
  for (int i = 0; i < shifted.rows(); ++i) shifted(i, i) += ridge;
  return sym_matrix_power(shifted, -0.5, 1e-12);
}

}  // namespace molt

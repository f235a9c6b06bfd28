#pragma once

// Test-only reference implementations. These deliberately avoid the library
// paths they are used to check: CCA correlations come from Cholesky
// whitening plus a one-sided Jacobi SVD (the library uses symmetric
// eigendecompositions), and the linear probe is a self-contained softmax
// regression over raw loops.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "molt/matrix.hpp"

namespace oracles {

using molt::Matrix;

// Lower-triangular Cholesky factor of an SPD matrix.
inline Matrix cholesky(const Matrix& a) {
  const int n = a.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        l(i, j) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

// Solves L * X = B for lower-triangular L.
inline Matrix forward_solve(const Matrix& l, const Matrix& b) {
  const int n = l.rows(), m = b.cols();
  Matrix x(n, m);
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < n; ++i) {
      double s = b(i, c);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

// Singular values (descending) via one-sided Jacobi column orthogonalization.
inline std::vector<double> singular_values(Matrix g) {
  const int rows = g.rows(), cols = g.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < rows; ++i) {
          app += g(i, p) * g(i, p);
          aqq += g(i, q) * g(i, q);
          apq += g(i, p) * g(i, q);
        }
        off = std::max(off, std::fabs(apq) / std::max(std::sqrt(app * aqq), 1e-300));
        if (std::fabs(apq) < 1e-15 * std::sqrt(app * aqq)) continue;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int i = 0; i < rows; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
      }
    }
    if (off < 1e-14) break;
  }
  std::vector<double> sv(cols);
  for (int q = 0; q < cols; ++q) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += g(i, q) * g(i, q);
    sv[q] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

// Canonical correlations (descending) of two row-sample batches with the
// ridge-regularized covariance convention (1/(B-1), +r on the diagonal).
inline std::vector<double> cca_correlations(const Matrix& h1_raw, const Matrix& h2_raw, double ridge) {
  const int b = h1_raw.rows(), d = h1_raw.cols();
  auto center = [](const Matrix& x) {
    Matrix out = x;
    for (int j = 0; j < x.cols(); ++j) {
      double m = 0.0;
      for (int i = 0; i < x.rows(); ++i) m += x(i, j);
      m /= x.rows();
      for (int i = 0; i < x.rows(); ++i) out(i, j) -= m;
    }
    return out;
  };
  const Matrix h1 = center(h1_raw), h2 = center(h2_raw);
  Matrix r11(d, d), r22(d, d), r12(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s11 = 0.0, s22 = 0.0, s12 = 0.0;
      for (int k = 0; k < b; ++k) {
        s11 += h1(k, i) * h1(k, j);
        s22 += h2(k, i) * h2(k, j);
        s12 += h1(k, i) * h2(k, j);
      }
      r11(i, j) = s11 / (b - 1);
      r22(i, j) = s22 / (b - 1);
      r12(i, j) = s12 / (b - 1);
    }
  for (int i = 0; i < d; ++i) {
    r11(i, i) += ridge;
    r22(i, i) += ridge;
  }
  const Matrix l1 = cholesky(r11);
  const Matrix l2 = cholesky(r22);
  // G = L1^-1 R12 L2^-T has the same singular values as
  // R11^-1/2 R12 R22^-1/2.
  const Matrix tmp = forward_solve(l1, r12);            // L1^-1 R12
  const Matrix g_t = forward_solve(l2, tmp.transposed());  // L2^-1 R12^T L1^-T
  return singular_values(g_t.transposed());
}

// Batch-gradient softmax regression; returns training accuracy. Used to
// probe how much label information a feature block carries.
inline double linear_probe_accuracy(const Matrix& features, const std::vector<int>& labels, int num_classes,
                                    int steps = 400, double lr = 0.5) {
  const int n = features.rows(), f = features.cols();
  Matrix w(f, num_classes);
  std::vector<double> bias(num_classes, 0.0);
  std::vector<double> probs(num_classes);

  for (int it = 0; it < steps; ++it) {
    Matrix gw(f, num_classes);
    std::vector<double> gb(num_classes, 0.0);
    for (int i = 0; i < n; ++i) {
      double mx = -1e300;
      for (int c = 0; c < num_classes; ++c) {
        double z = bias[c];
        for (int j = 0; j < f; ++j) z += features(i, j) * w(j, c);
        probs[c] = z;
        mx = std::max(mx, z);
      }
      double sum = 0.0;
      for (int c = 0; c < num_classes; ++c) {
        probs[c] = std::exp(probs[c] - mx);
        sum += probs[c];
      }
      for (int c = 0; c < num_classes; ++c) {
        const double delta = probs[c] / sum - (labels[i] == c ? 1.0 : 0.0);
        gb[c] += delta;
        for (int j = 0; j < f; ++j) gw(j, c) += features(i, j) * delta;
      }
    }
    for (int c = 0; c < num_classes; ++c) {
      bias[c] -= lr * gb[c] / n;
      for (int j = 0; j < f; ++j) w(j, c) -= lr * gw(j, c) / n;
    }
  }

  int correct = 0;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_z = -1e300;
    for (int c = 0; c < num_classes; ++c) {
      double z = bias[c];
      for (int j = 0; j < f; ++j) z += features(i, j) * w(j, c);
      if (z > best_z) {
        best_z = z;
        best = c;
      }
    }
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace oracles

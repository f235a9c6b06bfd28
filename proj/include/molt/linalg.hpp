#pragma once

#include <vector>

#include "molt/matrix.hpp"

namespace molt {

struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j is the eigenvector for values[j]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Input asymmetry
// beyond `sym_tol` in the infinity norm is a contract error.
SymEig symmetric_eig(const Matrix& a, double sym_tol = 1e-8);

// U * diag(max(lambda, floor)^power) * U^T for symmetric a.
Matrix sym_matrix_power(const Matrix& a, double power, double eig_floor, double sym_tol = 1e-8);

// (a + ridge*I)^(-1/2) via symmetric_eig; eigenvalues clamped at 1e-12
// before the power. Requires a + ridge*I positive definite in exact terms;
// the clamp keeps the numerics bounded near that edge.
Matrix matrix_inv_sqrt(const Matrix& a, double ridge);

}  // namespace molt

#pragma once

#include "molt/ops.hpp"

namespace molt {

enum class CcaNorm {
  TraceNorm,  // -(sum of singular values of F): total canonical correlation
  Frobenius,  // -(trace(F^T F))^(1/2)
};

struct CcaConfig {
  double ridge = 1e-3;        // added to both covariance diagonals
  double eig_floor = 1e-12;   // clamp for inverse powers only
  CcaNorm norm = CcaNorm::TraceNorm;
};

// Correlation loss between two pooled batches (rows are samples). Both
// batches are centered; with R11 = H_i^T H_i / (B-1) + r*I (R22 alike) and
// R12 = H_i^T H_t / (B-1), the whitened cross-covariance is
// F = R11^(-1/2) R12 R22^(-1/2) and the loss is the negated matrix norm of
// F selected by cfg. The gradient w.r.t. both batches is analytic (no
// differentiation through the eigendecomposition); see cca.cpp.
DiffNode cca_loss(DiffNode batch_h_i, DiffNode batch_h_t, const CcaConfig& cfg);

// Forward-only variant on plain matrices, shared with the tape op.
double cca_loss_value(const Matrix& batch_h_i, const Matrix& batch_h_t, const CcaConfig& cfg);

}  // namespace molt

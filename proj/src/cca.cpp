#include "molt/cca.hpp"

#include <cmath>

#include "molt/kernels.hpp"
#include "molt/linalg.hpp"

namespace molt {

namespace {

Matrix center_rows(const Matrix& x) {
  Matrix out = x;
  const int b = x.rows(), d = x.cols();
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < b; ++i) mean += x(i, j);
    mean /= b;
    for (int i = 0; i < b; ++i) out(i, j) -= mean;
  }
  return out;
}

// Subtract per-column means: the chain rule through row centering.
void center_grad_in_place(Matrix& g) {
  const int b = g.rows(), d = g.cols();
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < b; ++i) mean += g(i, j);
    mean /= b;
    for (int i = 0; i < b; ++i) g(i, j) -= mean;
  }
}

struct CcaResult {
  double loss = 0.0;
  Matrix grad_h1;  // d(loss)/d(batch_h_i), including centering chain
  Matrix grad_h2;
};

// Forward value and analytic gradient of the correlation objective.
//
// With T = R11^(-1/2) R12 R22^(-1/2) = U D V^T and corr = sum_k g_hat(d_k)
// a spectral function of the singular values, the gradient decomposes as
//   d corr/d R12 =      R11^(-1/2) U g(D) V^T R22^(-1/2)
//   d corr/d R11 = -1/2 R11^(-1/2) U g(D) D U^T R11^(-1/2)
//   d corr/d R22 = -1/2 R22^(-1/2) V g(D) D V^T R22^(-1/2)
// where g(D) = I for the trace norm and g(D) = D/|D|_F for the Frobenius
// norm. The required combinations never need U and V separately:
//   trace norm: U V^T = T (T^T T)^(-1/2), U D U^T = (T T^T)^(1/2),
//               V D V^T = (T^T T)^(1/2)
//   frobenius:  U g(D) V^T = T/|T|_F, U g(D) D U^T = T T^T/|T|_F,
//               V g(D) D V^T = T^T T/|T|_F
// so all factors come from symmetric eigendecompositions.
CcaResult cca_core(const Matrix& h1_raw, const Matrix& h2_raw, const CcaConfig& cfg, bool want_grad) {
  if (h1_raw.rows() != h2_raw.rows()) {
    throw ShapeError("cca_loss: batch sizes differ, " + h1_raw.shape_str() + " vs " + h2_raw.shape_str());
  }
  if (h1_raw.cols() != h2_raw.cols()) {
    throw ShapeError("cca_loss: feature dims differ, " + h1_raw.shape_str() + " vs " + h2_raw.shape_str());
  }
  const int b = h1_raw.rows();
  const int d = h1_raw.cols();
  if (b < 2) throw ContractError("cca_loss: batch size must be >= 2, got " + std::to_string(b));
  if (cfg.ridge <= 0.0) throw ContractError("cca_loss: ridge must be > 0");

  const Matrix h1 = center_rows(h1_raw);
  const Matrix h2 = center_rows(h2_raw);
  const double inv_bm1 = 1.0 / (b - 1);

  Matrix r11 = kernels::matmul_tn(h1, h1);
  Matrix r22 = kernels::matmul_tn(h2, h2);
  Matrix r12 = kernels::matmul_tn(h1, h2);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      r11(i, j) *= inv_bm1;
      r22(i, j) *= inv_bm1;
      r12(i, j) *= inv_bm1;
    }
  for (int i = 0; i < d; ++i) {
    r11(i, i) += cfg.ridge;
    r22(i, i) += cfg.ridge;
  }

  const Matrix w1 = sym_matrix_power(r11, -0.5, cfg.eig_floor);
  const Matrix w2 = sym_matrix_power(r22, -0.5, cfg.eig_floor);
  const Matrix f = kernels::matmul_nn(kernels::matmul_nn(w1, r12), w2);
  const Matrix ftf = kernels::matmul_tn(f, f);

  CcaResult res;
  double corr = 0.0;
  Matrix ugv;   // U g(D) V^T
  Matrix ugdu;  // U g(D) D U^T
  Matrix vgdv;  // V g(D) D V^T

  if (cfg.norm == CcaNorm::TraceNorm) {
    const SymEig eig = symmetric_eig(ftf);
    for (double lam : eig.values) corr += std::sqrt(std::max(lam, 0.0));
    if (want_grad) {
      ugv = kernels::matmul_nn(f, sym_matrix_power(ftf, -0.5, cfg.eig_floor));
      ugdu = sym_matrix_power(kernels::matmul_nt(f, f), 0.5, 0.0);
      vgdv = sym_matrix_power(ftf, 0.5, 0.0);
    }
  } else {
    double sq = 0.0;
    for (int i = 0; i < d; ++i) sq += ftf(i, i);
    corr = std::sqrt(std::max(sq, 0.0));
    if (want_grad) {
      const double inv = 1.0 / std::max(corr, cfg.eig_floor);
      ugv = f;
      ugdu = kernels::matmul_nt(f, f);
      vgdv = ftf;
      for (size_t i = 0; i < ugv.size(); ++i) ugv.data()[i] *= inv;
      for (size_t i = 0; i < ugdu.size(); ++i) ugdu.data()[i] *= inv;
      for (size_t i = 0; i < vgdv.size(); ++i) vgdv.data()[i] *= inv;
    }
  }
  res.loss = -corr;
  if (!want_grad) return res;

  // Pull the covariance-level gradients back to the centered batches.
  const Matrix d12 = kernels::matmul_nn(kernels::matmul_nn(w1, ugv), w2);
  Matrix d11 = kernels::matmul_nn(kernels::matmul_nn(w1, ugdu), w1);
  Matrix d22 = kernels::matmul_nn(kernels::matmul_nn(w2, vgdv), w2);
  for (size_t i = 0; i < d11.size(); ++i) d11.data()[i] *= -0.5;
  for (size_t i = 0; i < d22.size(); ++i) d22.data()[i] *= -0.5;

  // d corr/d h1 = (2 h1 d11 + h2 d12^T) / (B-1); loss = -corr.
  Matrix g1 = kernels::matmul_nn(h1, d11);
  g1.add_scaled_in_place(kernels::matmul_nt(h2, d12), 0.5);
  Matrix g2 = kernels::matmul_nn(h2, d22);
  g2.add_scaled_in_place(kernels::matmul_nn(h1, d12), 0.5);
  const double scale = -2.0 * inv_bm1;
  for (size_t i = 0; i < g1.size(); ++i) g1.data()[i] *= scale;
  for (size_t i = 0; i < g2.size(); ++i) g2.data()[i] *= scale;
  center_grad_in_place(g1);
  center_grad_in_place(g2);
  res.grad_h1 = std::move(g1);
  res.grad_h2 = std::move(g2);
  return res;
}

}  // namespace

double cca_loss_value(const Matrix& batch_h_i, const Matrix& batch_h_t, const CcaConfig& cfg) {
  return cca_core(batch_h_i, batch_h_t, cfg, false).loss;
}

DiffNode cca_loss(DiffNode batch_h_i, DiffNode batch_h_t, const CcaConfig& cfg) {
  if (batch_h_i.tape != batch_h_t.tape) throw ContractError("cca_loss: operands belong to different tapes");
  Tape& t = *batch_h_i.tape;
  CcaResult res = cca_core(batch_h_i.value(), batch_h_t.value(), cfg, true);
  Matrix out(1, 1);
  out(0, 0) = res.loss;
  const int i1 = batch_h_i.id, i2 = batch_h_t.id;
  return t.make(std::move(out),
                [i1, i2, g1 = std::move(res.grad_h1), g2 = std::move(res.grad_h2)](Tape& tp, const Tape::Node& self) {
                  const double g = self.grad(0, 0);
                  tp.grad_mut(i1).add_scaled_in_place(g1, g);
                  tp.grad_mut(i2).add_scaled_in_place(g2, g);
                });
}

}  // namespace molt

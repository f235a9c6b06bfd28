#include "molt/ops.hpp"

#include <cmath>

#include "molt/kernels.hpp"

namespace molt {

namespace {

Tape& tape_of(DiffNode a, DiffNode b, const char* op) {
  if (a.tape != b.tape) throw ContractError(std::string(op) + ": operands belong to different tapes");
  return *a.tape;
}

}  // namespace

DiffNode matmul(DiffNode a, DiffNode b) {
  Tape& t = tape_of(a, b, "matmul");
  Matrix out = kernels::matmul_nn(a.value(), b.value());
  const int ai = a.id, bi = b.id;
  return t.make(std::move(out), [ai, bi](Tape& tp, const Tape::Node& self) {
    // d/da = g * b^T, d/db = a^T * g
    tp.grad_mut(ai).add_in_place(kernels::matmul_nt(self.grad, tp.value(bi)));
    tp.grad_mut(bi).add_in_place(kernels::matmul_tn(tp.value(ai), self.grad));
  });
}

DiffNode matmul_nt(DiffNode a, DiffNode b) {
  Tape& t = tape_of(a, b, "matmul_nt");
  Matrix out = kernels::matmul_nt(a.value(), b.value());
  const int ai = a.id, bi = b.id;
  return t.make(std::move(out), [ai, bi](Tape& tp, const Tape::Node& self) {
    // out = a * b^T: d/da = g * b, d/db = g^T * a
    tp.grad_mut(ai).add_in_place(kernels::matmul_nn(self.grad, tp.value(bi)));
    tp.grad_mut(bi).add_in_place(kernels::matmul_tn(self.grad, tp.value(ai)));
  });
}

DiffNode add(DiffNode a, DiffNode b) {
  Tape& t = tape_of(a, b, "add");
  check_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out.add_in_place(b.value());
  const int ai = a.id, bi = b.id;
  return t.make(std::move(out), [ai, bi](Tape& tp, const Tape::Node& self) {
    tp.grad_mut(ai).add_in_place(self.grad);
    tp.grad_mut(bi).add_in_place(self.grad);
  });
}

DiffNode add_scaled(DiffNode a, double ca, DiffNode b, double cb) {
  Tape& t = tape_of(a, b, "add_scaled");
  check_same_shape(a.value(), b.value(), "add_scaled");
  Matrix out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = ca * out.data()[i] + cb * b.value().data()[i];
  const int ai = a.id, bi = b.id;
  return t.make(std::move(out), [ai, bi, ca, cb](Tape& tp, const Tape::Node& self) {
    tp.grad_mut(ai).add_scaled_in_place(self.grad, ca);
    tp.grad_mut(bi).add_scaled_in_place(self.grad, cb);
  });
}

DiffNode add_row_broadcast(DiffNode x, DiffNode row) {
  Tape& t = tape_of(x, row, "add_row_broadcast");
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw ShapeError("add_row_broadcast: row must be 1x" + std::to_string(xv.cols()) + ", got " + rv.shape_str());
  }
  Matrix out = xv;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  const int xi = x.id, ri = row.id;
  return t.make(std::move(out), [xi, ri](Tape& tp, const Tape::Node& self) {
    tp.grad_mut(xi).add_in_place(self.grad);
    Matrix& gr = tp.grad_mut(ri);
    for (int j = 0; j < self.grad.cols(); ++j) {
      double s = 0.0;
      for (int i = 0; i < self.grad.rows(); ++i) s += self.grad(i, j);
      gr(0, j) += s;
    }
  });
}

DiffNode scale(DiffNode x, double c) {
  Tape& t = *x.tape;
  Matrix out = x.value();
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  const int xi = x.id;
  return t.make(std::move(out), [xi, c](Tape& tp, const Tape::Node& self) {
    tp.grad_mut(xi).add_scaled_in_place(self.grad, c);
  });
}

DiffNode hadamard(DiffNode a, DiffNode b) {
  Tape& t = tape_of(a, b, "hadamard");
  check_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  const int ai = a.id, bi = b.id;
  return t.make(std::move(out), [ai, bi](Tape& tp, const Tape::Node& self) {
    Matrix& ga = tp.grad_mut(ai);
    Matrix& gb = tp.grad_mut(bi);
    const Matrix& av = tp.value(ai);
    const Matrix& bv = tp.value(bi);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      ga.data()[i] += self.grad.data()[i] * bv.data()[i];
      gb.data()[i] += self.grad.data()[i] * av.data()[i];
    }
  });
}

DiffNode softmax_rows(DiffNode x) {
  Tape& t = *x.tape;
  Matrix out = kernels::softmax_rows(x.value());
  const int xi = x.id;
  return t.make(std::move(out), [xi](Tape& tp, const Tape::Node& self) {
    // dx_j = y_j * (g_j - sum_k g_k y_k) per row
    Matrix& gx = tp.grad_mut(xi);
    const Matrix& y = self.value;
    for (int i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols(); ++j) dot += self.grad(i, j) * y(i, j);
      for (int j = 0; j < y.cols(); ++j) gx(i, j) += y(i, j) * (self.grad(i, j) - dot);
    }
  });
}

DiffNode layer_norm(DiffNode x, DiffNode gamma, DiffNode beta, double eps) {
  Tape& t = *x.tape;
  if (gamma.tape != &t || beta.tape != &t) throw ContractError("layer_norm: operands belong to different tapes");
  const Matrix& xv = x.value();
  const int m = xv.rows(), n = xv.cols();
  if (gamma.value().rows() != 1 || gamma.value().cols() != n || beta.value().rows() != 1 || beta.value().cols() != n) {
    throw ShapeError("layer_norm: gamma/beta must be 1x" + std::to_string(n));
  }
  if (eps <= 0.0) throw ContractError("layer_norm: eps must be > 0");

  // Population variance (1/n) per row.
  Matrix norm(m, n);         // x_hat
  std::vector<double> inv_std(m);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += xv(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = xv(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (int j = 0; j < n; ++j) norm(i, j) = (xv(i, j) - mean) * inv;
  }
  Matrix out(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = gamma.value()(0, j) * norm(i, j) + beta.value()(0, j);

  const int xi = x.id, gi = gamma.id, bi = beta.id;
  return t.make(std::move(out), [xi, gi, bi, norm, inv_std](Tape& tp, const Tape::Node& self) {
    Matrix& gx = tp.grad_mut(xi);
    Matrix& gg = tp.grad_mut(gi);
    Matrix& gb = tp.grad_mut(bi);
    const Matrix& gamma_v = tp.value(gi);
    const int m2 = self.grad.rows(), n2 = self.grad.cols();
    for (int i = 0; i < m2; ++i) {
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (int j = 0; j < n2; ++j) {
        const double g = self.grad(i, j);
        gb(0, j) += g;
        gg(0, j) += g * norm(i, j);
        const double dxhat = g * gamma_v(0, j);
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * norm(i, j);
      }
      mean_dxhat /= n2;
      mean_dxhat_xhat /= n2;
      for (int j = 0; j < n2; ++j) {
        const double dxhat = self.grad(i, j) * gamma_v(0, j);
        gx(i, j) += inv_std[i] * (dxhat - mean_dxhat - norm(i, j) * mean_dxhat_xhat);
      }
    }
  });
}

DiffNode l2_normalize(DiffNode x, double eps) {
  Tape& t = *x.tape;
  const Matrix& xv = x.value();
  if (xv.rows() != 1) throw ShapeError("l2_normalize: expects a 1xn row, got " + xv.shape_str());
  if (eps <= 0.0) throw ContractError("l2_normalize: eps must be > 0");

  const double norm = xv.frobenius_norm();
  const double denom = std::max(norm, eps);
  Matrix out = xv;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] /= denom;

  const int xi = x.id;
  const bool clamped = norm < eps;
  return t.make(std::move(out), [xi, denom, clamped](Tape& tp, const Tape::Node& self) {
    Matrix& gx = tp.grad_mut(xi);
    const Matrix& y = self.value;
    if (clamped) {
      // Denominator is the constant eps below the clamp.
      gx.add_scaled_in_place(self.grad, 1.0 / denom);
      return;
    }
    double dot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) dot += self.grad.data()[i] * y.data()[i];
    for (size_t i = 0; i < y.size(); ++i) {
      gx.data()[i] += (self.grad.data()[i] - y.data()[i] * dot) / denom;
    }
  });
}

DiffNode sum_pool_stride(DiffNode x, int s) {
  Tape& t = *x.tape;
  const Matrix& xv = x.value();
  if (xv.rows() != 1) throw ShapeError("sum_pool_stride: expects a 1xn row, got " + xv.shape_str());
  if (s < 1 || xv.cols() % s != 0) {
    throw ShapeError("sum_pool_stride: stride " + std::to_string(s) + " does not divide " + std::to_string(xv.cols()));
  }
  const int out_n = xv.cols() / s;
  Matrix out(1, out_n);
  for (int j = 0; j < out_n; ++j) {
    double acc = 0.0;
    for (int k = 0; k < s; ++k) acc += xv(0, j * s + k);
    out(0, j) = acc;
  }
  const int xi = x.id;
  return t.make(std::move(out), [xi, s](Tape& tp, const Tape::Node& self) {
    Matrix& gx = tp.grad_mut(xi);
    for (int j = 0; j < self.grad.cols(); ++j)
      for (int k = 0; k < s; ++k) gx(0, j * s + k) += self.grad(0, j);
  });
}

DiffNode mean_pool_rows(DiffNode x) {
  Tape& t = *x.tape;
  const Matrix& xv = x.value();
  if (xv.rows() < 1) throw ContractError("mean_pool_rows: needs at least one row");
  const int m = xv.rows(), n = xv.cols();
  Matrix out(1, n);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += xv(i, j);
    out(0, j) = acc / m;
  }
  const int xi = x.id;
  return t.make(std::move(out), [xi, m](Tape& tp, const Tape::Node& self) {
    Matrix& gx = tp.grad_mut(xi);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < self.grad.cols(); ++j) gx(i, j) += self.grad(0, j) / m;
  });
}

DiffNode stack_rows(const std::vector<DiffNode>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: empty input");
  Tape& t = *rows[0].tape;
  const int n = rows[0].value().cols();
  Matrix out(static_cast<int>(rows.size()), n);
  std::vector<int> ids(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].tape != &t) throw ContractError("stack_rows: operands belong to different tapes");
    const Matrix& rv = rows[i].value();
    if (rv.rows() != 1 || rv.cols() != n) {
      throw ShapeError("stack_rows: row " + std::to_string(i) + " is " + rv.shape_str() + ", expected 1x" +
                       std::to_string(n));
    }
    for (int j = 0; j < n; ++j) out(static_cast<int>(i), j) = rv(0, j);
    ids[i] = rows[i].id;
  }
  return t.make(std::move(out), [ids](Tape& tp, const Tape::Node& self) {
    for (size_t i = 0; i < ids.size(); ++i) {
      Matrix& g = tp.grad_mut(ids[i]);
      for (int j = 0; j < self.grad.cols(); ++j) g(0, j) += self.grad(static_cast<int>(i), j);
    }
  });
}

DiffNode sum_entries(DiffNode x) {
  Tape& t = *x.tape;
  double s = 0.0;
  for (size_t i = 0; i < x.value().size(); ++i) s += x.value().data()[i];
  Matrix out(1, 1);
  out(0, 0) = s;
  const int xi = x.id;
  return t.make(std::move(out), [xi](Tape& tp, const Tape::Node& self) {
    Matrix& gx = tp.grad_mut(xi);
    const double g = self.grad(0, 0);
    for (size_t i = 0; i < gx.size(); ++i) gx.data()[i] += g;
  });
}

DiffNode mean_scalars(const std::vector<DiffNode>& xs) {
  if (xs.empty()) throw ContractError("mean_scalars: empty input");
  Tape& t = *xs[0].tape;
  double s = 0.0;
  std::vector<int> ids(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].value().rows() != 1 || xs[i].value().cols() != 1) {
      throw ShapeError("mean_scalars: operand " + std::to_string(i) + " is not 1x1");
    }
    s += xs[i].value()(0, 0);
    ids[i] = xs[i].id;
  }
  Matrix out(1, 1);
  out(0, 0) = s / static_cast<double>(xs.size());
  return t.make(std::move(out), [ids](Tape& tp, const Tape::Node& self) {
    const double g = self.grad(0, 0) / static_cast<double>(ids.size());
    for (int id : ids) tp.grad_mut(id)(0, 0) += g;
  });
}

DiffNode softmax_cross_entropy(DiffNode logits, int label) {
  Tape& t = *logits.tape;
  const Matrix& z = logits.value();
  if (z.rows() != 1) throw ShapeError("softmax_cross_entropy: logits must be 1xC, got " + z.shape_str());
  if (label < 0 || label >= z.cols()) {
    throw ContractError("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                        std::to_string(z.cols()) + " classes");
  }
  double mx = z(0, 0);
  for (int j = 1; j < z.cols(); ++j) mx = std::max(mx, z(0, j));
  double sum = 0.0;
  for (int j = 0; j < z.cols(); ++j) sum += std::exp(z(0, j) - mx);
  const double lse = mx + std::log(sum);
  Matrix out(1, 1);
  out(0, 0) = lse - z(0, label);

  const int zi = logits.id;
  return t.make(std::move(out), [zi, label, lse](Tape& tp, const Tape::Node& self) {
    Matrix& gz = tp.grad_mut(zi);
    const Matrix& z2 = tp.value(zi);
    const double g = self.grad(0, 0);
    for (int j = 0; j < z2.cols(); ++j) {
      const double p = std::exp(z2(0, j) - lse);
      gz(0, j) += g * (p - (j == label ? 1.0 : 0.0));
    }
  });
}

DiffNode sigmoid_cross_entropy(DiffNode logits, const std::vector<uint8_t>& targets) {
  Tape& t = *logits.tape;
  const Matrix& z = logits.value();
  if (z.rows() != 1) throw ShapeError("sigmoid_cross_entropy: logits must be 1xC, got " + z.shape_str());
  if (static_cast<int>(targets.size()) != z.cols()) {
    throw ContractError("sigmoid_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(z.cols()) + " classes");
  }
  const int c = z.cols();
  double loss = 0.0;
  for (int j = 0; j < c; ++j) {
    const double zj = z(0, j);
    const double yj = targets[j] ? 1.0 : 0.0;
    // max(z,0) - z*y + log(1 + exp(-|z|)) is the overflow-safe form.
    loss += std::max(zj, 0.0) - zj * yj + std::log1p(std::exp(-std::fabs(zj)));
  }
  Matrix out(1, 1);
  out(0, 0) = loss / c;

  const int zi = logits.id;
  const std::vector<uint8_t> y = targets;
  return t.make(std::move(out), [zi, y](Tape& tp, const Tape::Node& self) {
    Matrix& gz = tp.grad_mut(zi);
    const Matrix& z2 = tp.value(zi);
    const double g = self.grad(0, 0) / z2.cols();
    for (int j = 0; j < z2.cols(); ++j) {
      const double sig = 1.0 / (1.0 + std::exp(-z2(0, j)));
      gz(0, j) += g * (sig - (y[j] ? 1.0 : 0.0));
    }
  });
}

DiffNode affine(DiffNode x, DiffNode w, DiffNode b) { return add_row_broadcast(matmul(x, w), b); }

}  // namespace molt

#include "molt/matrix.hpp"

#include <cmath>
#include <cstring>

namespace molt {

Matrix::Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " does not match " + shape_str());
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::filled(int rows, int cols, double v) {
  Matrix m(rows, cols);
  m.fill(v);
  return m;
}

Matrix Matrix::row_vector(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Matrix(1, n, std::move(v));
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Matrix::bitwise_equal(const Matrix& o) const {
  if (!same_shape(o)) return false;
  if (data_.empty()) return true;
  return std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(double)) == 0;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

void Matrix::fill(double v) {
  for (double& x : data_) x = v;
}

void Matrix::add_in_place(const Matrix& o) {
  check_same_shape(*this, o, "add_in_place");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Matrix::add_scaled_in_place(const Matrix& o, double c) {
  check_same_shape(*this, o, "add_scaled_in_place");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += c * o.data_[i];
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

void check_inner_dims(const Matrix& a, const Matrix& b, const char* op) {
  if (a.cols() != b.rows()) {
    throw ShapeError(std::string(op) + ": inner dims disagree, " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace molt

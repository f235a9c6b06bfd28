#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "molt/errors.hpp"

namespace molt {

// Dense row-major matrix of doubles. All public operations keep entries finite.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {}
  Matrix(int rows, int cols, std::vector<double> data);

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
  static Matrix identity(int n);
  static Matrix filled(int rows, int cols, double v);
  static Matrix row_vector(std::vector<double> v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  bool all_finite() const;
  bool bitwise_equal(const Matrix& o) const;
  double max_abs() const;                    // infinity norm over entries
  double frobenius_norm() const;
  Matrix transposed() const;

  void fill(double v);
  void add_in_place(const Matrix& o);        // this += o
  void add_scaled_in_place(const Matrix& o, double c);  // this += c * o

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Throws ShapeError naming both shapes unless the stated dims agree.
void check_same_shape(const Matrix& a, const Matrix& b, const char* op);
void check_inner_dims(const Matrix& a, const Matrix& b, const char* op);

}  // namespace molt

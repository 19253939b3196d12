#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dscnn {

/// Dense row-major matrix of 64-bit floats. Column vectors are represented
/// as n x 1 matrices throughout the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix full(std::size_t rows, std::size_t cols, double value);
  static Matrix identity(std::size_t n);
  static Matrix column(const std::vector<double>& values);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  void fill(double value);
  bool all_finite() const;
  double max_abs() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Nonlin { identity, sigmoid, tanh, relu };

const char* nonlin_name(Nonlin fn);
Nonlin nonlin_from_name(const std::string& name);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);

/// Entrywise nonlinearity. Rejects non-finite input.
Matrix map_elementwise(const Matrix& x, Nonlin fn);

/// Derivative of `fn` expressed in terms of pre-activation `x` and
/// activation `y = map_elementwise(x, fn)`.
double nonlin_derivative(Nonlin fn, double x, double y);

/// Numerically stable softmax of a column vector (max subtraction).
Matrix softmax(const Matrix& x);

double sum(const Matrix& x);

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const std::string& what);

}  // namespace dscnn

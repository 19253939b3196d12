#include "dscnn/matrix.hpp"

#include <cmath>
#include <sstream>

#include "dscnn/error.hpp"

namespace dscnn {

Matrix Matrix::full(std::size_t rows, std::size_t cols, double value) {
  Matrix m(rows, cols);
  m.fill(value);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(const std::vector<double>& values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return m;
}

std::string Matrix::shape_str() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

void Matrix::fill(double value) {
  for (double& v : data_) v = value;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

const char* nonlin_name(Nonlin fn) {
  switch (fn) {
    case Nonlin::identity: return "identity";
    case Nonlin::sigmoid: return "sigmoid";
    case Nonlin::tanh: return "tanh";
    case Nonlin::relu: return "relu";
  }
  return "?";
}

Nonlin nonlin_from_name(const std::string& name) {
  if (name == "identity") return Nonlin::identity;
  if (name == "sigmoid") return Nonlin::sigmoid;
  if (name == "tanh") return Nonlin::tanh;
  if (name == "relu") return Nonlin::relu;
  throw DomainError("unknown nonlinearity: " + name);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: incompatible shapes " + a.shape_str() +
                         " x " + b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("sub: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("hadamard: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor;
  return out;
}

namespace {

double apply_nonlin(Nonlin fn, double x) {
  switch (fn) {
    case Nonlin::identity: return x;
    case Nonlin::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Nonlin::tanh: return std::tanh(x);
    case Nonlin::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

}  // namespace

Matrix map_elementwise(const Matrix& x, Nonlin fn) {
  if (!x.all_finite()) {
    throw DomainError(std::string("map_elementwise(") + nonlin_name(fn) +
                      "): non-finite input");
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = apply_nonlin(fn, out.data()[i]);
  return out;
}

double nonlin_derivative(Nonlin fn, double x, double y) {
  switch (fn) {
    case Nonlin::identity: return 1.0;
    case Nonlin::sigmoid: return y * (1.0 - y);
    case Nonlin::tanh: return 1.0 - y * y;
    case Nonlin::relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Matrix softmax(const Matrix& x) {
  if (x.size() == 0) throw DomainError("softmax: empty input");
  if (x.cols() != 1) {
    throw DimensionError("softmax: expected column vector, got " +
                         x.shape_str());
  }
  if (!x.all_finite()) throw DomainError("softmax: non-finite input");
  double mx = x(0, 0);
  for (std::size_t i = 1; i < x.rows(); ++i) mx = std::max(mx, x(i, 0));
  Matrix out(x.rows(), 1);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out(i, 0) = std::exp(x(i, 0) - mx);
    total += out(i, 0);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) out(i, 0) /= total;
  return out;
}

double sum(const Matrix& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x.data()[i];
  return total;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got "
       << m.shape_str();
    throw DimensionError(os.str());
  }
}

}  // namespace dscnn

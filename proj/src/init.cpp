#include "dscnn/init.hpp"

#include <cmath>

#include "dscnn/error.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

namespace {

// Columns of g orthonormalized in place, g.rows() >= g.cols().
void gram_schmidt(Matrix& g) {
  const std::size_t n = g.rows(), m = g.cols();
  // two passes: plain MGS leaves O(eps * kappa) residuals, the second
  // pass brings ||Q^T Q - I|| down to machine-precision territory
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t p = 0; p < j; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += g(i, p) * g(i, j);
        for (std::size_t i = 0; i < n; ++i) g(i, j) -= dot * g(i, p);
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += g(i, j) * g(i, j);
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        throw DomainError("init_orthogonal: degenerate Gaussian draw");
      }
      for (std::size_t i = 0; i < n; ++i) g(i, j) /= norm;
    }
  }
}

}  // namespace

Matrix init_orthogonal(std::size_t rows, std::size_t cols,
                       std::uint64_t seed) {
  if (rows == 0 || cols == 0) {
    throw DomainError("init_orthogonal: zero dimension");
  }
  const bool wide = rows < cols;
  const std::size_t n = wide ? cols : rows;
  const std::size_t m = wide ? rows : cols;
  Rng rng(seed);
  Matrix g(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) g(i, j) = rng.gaussian();
  gram_schmidt(g);
  return wide ? transpose(g) : g;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, double half_width,
                    std::uint64_t seed) {
  if (half_width <= 0.0) {
    throw DomainError("init_uniform: half_width must be positive");
  }
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-half_width, half_width);
  return m;
}

}  // namespace dscnn

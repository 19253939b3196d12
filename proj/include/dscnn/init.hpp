#pragma once

#include <cstdint>

#include "dscnn/matrix.hpp"

namespace dscnn {

/// Orthonormalizes a seeded Gaussian matrix with modified Gram-Schmidt
/// (two passes). For rows >= cols the columns are orthonormal; for
/// rows < cols the transpose is orthonormalized instead, so the rows are.
/// Gram-Schmidt keeps the diagonal of R positive, which fixes signs and
/// makes the result a deterministic function of the seed.
Matrix init_orthogonal(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Entries i.i.d. uniform in [-half_width, +half_width].
Matrix init_uniform(std::size_t rows, std::size_t cols, double half_width,
                    std::uint64_t seed);

}  // namespace dscnn

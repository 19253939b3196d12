#pragma once

#include "dscnn/matrix.hpp"
#include "dscnn/tape.hpp"

namespace dscnn::ag {

// Recorded counterparts of the dense kernels. Each returns the id of a new
// node whose backward closure routes gradients to the operands.

NodeId matmul(Tape& t, NodeId a, NodeId b);
NodeId add(Tape& t, NodeId a, NodeId b);
NodeId sub(Tape& t, NodeId a, NodeId b);
NodeId hadamard(Tape& t, NodeId a, NodeId b);
NodeId scale(Tape& t, NodeId a, double factor);
NodeId map(Tape& t, NodeId x, Nonlin fn);
NodeId softmax(Tape& t, NodeId x);
NodeId sum(Tape& t, NodeId x);

/// Gate pre-activation W x + U h + b in one node; the LSTM and RNN steps
/// are built from this.
NodeId affine(Tape& t, NodeId w, NodeId x, NodeId u, NodeId h, NodeId b);

/// W x + b.
NodeId affine_nb(Tape& t, NodeId w, NodeId x, NodeId b);

/// Column j of a matrix as a column vector.
NodeId column(Tape& t, NodeId m, std::size_t j);

/// Column vectors glued left to right into an n x s matrix.
NodeId hstack(Tape& t, const std::vector<NodeId>& cols);

/// Column vectors stacked vertically.
NodeId concat_rows(Tape& t, const std::vector<NodeId>& parts);

/// Arithmetic mean over columns, n x s -> n x 1.
NodeId mean_cols(Tape& t, NodeId m);

}  // namespace dscnn::ag

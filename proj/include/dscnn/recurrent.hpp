#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscnn/matrix.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/tape.hpp"

namespace dscnn {

/// Gate parameters of an LSTM cell. W* map the input (h_dim x in_dim),
/// U* map the previous hidden state (h_dim x h_dim), b* are biases.
struct LstmParams {
  Matrix Wi, Wf, Wo, Wu;
  Matrix Ui, Uf, Uo, Uu;
  Matrix bi, bf, bo, bu;

  std::size_t hidden_dim() const { return Wi.rows(); }
  std::size_t input_dim() const { return Wi.cols(); }
};

struct LstmState {
  Matrix h;  // h_dim x 1, entries in (-1, 1)
  Matrix c;  // h_dim x 1
};

struct RnnParams {
  Matrix W;  // h_dim x in_dim
  Matrix U;  // h_dim x h_dim
  Matrix b;  // h_dim x 1
};

/// W and U orthogonal, biases zero except an optional forget-gate offset.
LstmParams make_lstm_params(std::size_t hidden_dim, std::size_t input_dim,
                            std::uint64_t seed, double forget_bias = 0.0);

RnnParams make_rnn_params(std::size_t hidden_dim, std::size_t input_dim,
                          std::uint64_t seed);

LstmState zero_state(std::size_t hidden_dim);

/// tanh(W x + U h_prev + b).
Matrix rnn_step(const RnnParams& p, const Matrix& x, const Matrix& h_prev);

/// The six-line gate system:
///   i = sigmoid(Wi x + Ui h + bi)      f = sigmoid(Wf x + Uf h + bf)
///   o = sigmoid(Wo x + Uo h + bo)      u = tanh(Wu x + Uu h + bu)
///   c' = i.u + f.c                     h' = o.tanh(c')
LstmState lstm_step(const LstmParams& p, const Matrix& x, const LstmState& s);

/// Runs the cell over all columns of `inputs` from the zero state and
/// returns every hidden state as a column of an h_dim x s matrix.
Matrix lstm_run(const LstmParams& p, const Matrix& inputs);

/// Tape-resident parameter handles for one cell.
struct LstmNodes {
  NodeId Wi, Wf, Wo, Wu, Ui, Uf, Uo, Uu, bi, bf, bo, bu;
};

struct LstmStateNodes {
  NodeId h, c;
};

LstmNodes lstm_push(Tape& t, const LstmParams& p, bool as_parameters = true);

LstmStateNodes lstm_step_node(Tape& t, const LstmNodes& p, NodeId x,
                              const LstmStateNodes& s);

struct LstmRunNodes {
  NodeId hidden_seq;  // h_dim x s
  LstmStateNodes last;
};

LstmRunNodes lstm_run_node(Tape& t, const LstmNodes& p, NodeId inputs);

/// Ordered (name, matrix) view used by checkpoints and the optimizer.
std::vector<std::pair<std::string, Matrix*>> lstm_named_params(
    LstmParams& p, const std::string& prefix);

}  // namespace dscnn

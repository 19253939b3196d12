#include "dscnn/recurrent.hpp"

#include "dscnn/error.hpp"
#include "dscnn/init.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

LstmParams make_lstm_params(std::size_t hidden_dim, std::size_t input_dim,
                            std::uint64_t seed, double forget_bias) {
  if (hidden_dim == 0 || input_dim == 0) {
    throw DomainError("make_lstm_params: zero dimension");
  }
  LstmParams p;
  const char* gates = "ifou";
  Matrix* ws[] = {&p.Wi, &p.Wf, &p.Wo, &p.Wu};
  Matrix* us[] = {&p.Ui, &p.Uf, &p.Uo, &p.Uu};
  Matrix* bs[] = {&p.bi, &p.bf, &p.bo, &p.bu};
  for (int g = 0; g < 4; ++g) {
    *ws[g] = init_orthogonal(hidden_dim, input_dim,
                             derive_seed(seed, "lstm-W", gates[g]));
    *us[g] = init_orthogonal(hidden_dim, hidden_dim,
                             derive_seed(seed, "lstm-U", gates[g]));
    *bs[g] = Matrix(hidden_dim, 1);
  }
  if (forget_bias != 0.0) p.bf.fill(forget_bias);
  return p;
}

RnnParams make_rnn_params(std::size_t hidden_dim, std::size_t input_dim,
                          std::uint64_t seed) {
  if (hidden_dim == 0 || input_dim == 0) {
    throw DomainError("make_rnn_params: zero dimension");
  }
  RnnParams p;
  p.W = init_orthogonal(hidden_dim, input_dim, derive_seed(seed, "rnn-W"));
  p.U = init_orthogonal(hidden_dim, hidden_dim, derive_seed(seed, "rnn-U"));
  p.b = Matrix(hidden_dim, 1);
  return p;
}

LstmState zero_state(std::size_t hidden_dim) {
  return LstmState{Matrix(hidden_dim, 1), Matrix(hidden_dim, 1)};
}

Matrix rnn_step(const RnnParams& p, const Matrix& x, const Matrix& h_prev) {
  if (p.W.cols() != x.rows() || p.U.cols() != h_prev.rows() ||
      x.cols() != 1 || h_prev.cols() != 1) {
    throw DimensionError("rnn_step: x " + x.shape_str() + " h " +
                         h_prev.shape_str() + " do not fit W " +
                         p.W.shape_str() + " U " + p.U.shape_str());
  }
  return map_elementwise(
      add(add(matmul(p.W, x), matmul(p.U, h_prev)), p.b), Nonlin::tanh);
}

LstmState lstm_step(const LstmParams& p, const Matrix& x, const LstmState& s) {
  if (p.Wi.cols() != x.rows() || p.Ui.cols() != s.h.rows() || x.cols() != 1) {
    throw DimensionError("lstm_step: x " + x.shape_str() + " h " +
                         s.h.shape_str() + " do not fit W " +
                         p.Wi.shape_str() + " U " + p.Ui.shape_str());
  }
  auto gate = [&](const Matrix& W, const Matrix& U, const Matrix& b,
                  Nonlin fn) {
    return map_elementwise(add(add(matmul(W, x), matmul(U, s.h)), b), fn);
  };
  const Matrix i = gate(p.Wi, p.Ui, p.bi, Nonlin::sigmoid);
  const Matrix f = gate(p.Wf, p.Uf, p.bf, Nonlin::sigmoid);
  const Matrix o = gate(p.Wo, p.Uo, p.bo, Nonlin::sigmoid);
  const Matrix u = gate(p.Wu, p.Uu, p.bu, Nonlin::tanh);
  LstmState next;
  next.c = add(hadamard(i, u), hadamard(f, s.c));
  next.h = hadamard(o, map_elementwise(next.c, Nonlin::tanh));
  return next;
}

Matrix lstm_run(const LstmParams& p, const Matrix& inputs) {
  if (inputs.cols() == 0) throw DomainError("lstm_run: empty sequence");
  LstmState s = zero_state(p.hidden_dim());
  Matrix out(p.hidden_dim(), inputs.cols());
  Matrix x(inputs.rows(), 1);
  for (std::size_t t = 0; t < inputs.cols(); ++t) {
    for (std::size_t i = 0; i < inputs.rows(); ++i) x(i, 0) = inputs(i, t);
    s = lstm_step(p, x, s);
    for (std::size_t i = 0; i < p.hidden_dim(); ++i) out(i, t) = s.h(i, 0);
  }
  return out;
}

LstmNodes lstm_push(Tape& t, const LstmParams& p, bool as_parameters) {
  auto put = [&](const Matrix& m) {
    return as_parameters ? t.parameter(m) : t.constant(m);
  };
  return LstmNodes{put(p.Wi), put(p.Wf), put(p.Wo), put(p.Wu),
                   put(p.Ui), put(p.Uf), put(p.Uo), put(p.Uu),
                   put(p.bi), put(p.bf), put(p.bo), put(p.bu)};
}

LstmStateNodes lstm_step_node(Tape& t, const LstmNodes& p, NodeId x,
                              const LstmStateNodes& s) {
  const NodeId i = ag::map(t, ag::affine(t, p.Wi, x, p.Ui, s.h, p.bi),
                           Nonlin::sigmoid);
  const NodeId f = ag::map(t, ag::affine(t, p.Wf, x, p.Uf, s.h, p.bf),
                           Nonlin::sigmoid);
  const NodeId o = ag::map(t, ag::affine(t, p.Wo, x, p.Uo, s.h, p.bo),
                           Nonlin::sigmoid);
  const NodeId u = ag::map(t, ag::affine(t, p.Wu, x, p.Uu, s.h, p.bu),
                           Nonlin::tanh);
  const NodeId c =
      ag::add(t, ag::hadamard(t, i, u), ag::hadamard(t, f, s.c));
  const NodeId h = ag::hadamard(t, o, ag::map(t, c, Nonlin::tanh));
  return LstmStateNodes{h, c};
}

LstmRunNodes lstm_run_node(Tape& t, const LstmNodes& p, NodeId inputs) {
  // note: value() references go stale once new nodes are pushed
  const std::size_t steps = t.value(inputs).cols();
  if (steps == 0) throw DomainError("lstm_run: empty sequence");
  const std::size_t hidden = t.value(p.Wi).rows();
  LstmStateNodes s{t.constant(Matrix(hidden, 1)),
                   t.constant(Matrix(hidden, 1))};
  std::vector<NodeId> hs;
  hs.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    s = lstm_step_node(t, p, ag::column(t, inputs, step), s);
    hs.push_back(s.h);
  }
  return LstmRunNodes{ag::hstack(t, hs), s};
}

std::vector<std::pair<std::string, Matrix*>> lstm_named_params(
    LstmParams& p, const std::string& prefix) {
  return {{prefix + ".Wi", &p.Wi}, {prefix + ".Wf", &p.Wf},
          {prefix + ".Wo", &p.Wo}, {prefix + ".Wu", &p.Wu},
          {prefix + ".Ui", &p.Ui}, {prefix + ".Uf", &p.Uf},
          {prefix + ".Uo", &p.Uo}, {prefix + ".Uu", &p.Uu},
          {prefix + ".bi", &p.bi}, {prefix + ".bf", &p.bf},
          {prefix + ".bo", &p.bo}, {prefix + ".bu", &p.bu}};
}

}  // namespace dscnn

#include "dscnn/model.hpp"

#include "dscnn/error.hpp"
#include "dscnn/init.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

namespace {

bool is_delimiter_token(const std::string& tok) {
  return tok == "," || tok == "." || tok == "?" || tok == "!";
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate,
                    std::uint64_t seed) {
  Rng rng(seed);
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
  return mask;
}

void check_classes(int classes) {
  if (classes < 2) throw DomainError("model: need at least 2 classes");
}

}  // namespace

SentenceModel make_sentence_model(ChannelSet channels, const ModelInit& init) {
  check_classes(init.classes);
  SentenceModel m;
  m.channels = std::move(channels);
  const std::size_t d = m.channels.dim();
  const std::size_t h = init.h_dim ? init.h_dim : d;
  m.conv_only = init.conv_only;
  m.dropout_rate = init.dropout_rate;
  if (!m.conv_only) {
    for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
      m.lstm.push_back(make_lstm_params(
          h, d, derive_seed(init.seed, "lstm", ci), init.forget_bias));
    }
  }
  const std::size_t feat = m.conv_only ? d : h;
  m.bank = make_filter_bank(init.filter_spec, m.channels.count(), feat,
                            init.conv_nonlinearity,
                            derive_seed(init.seed, "bank"));
  m.cls_W = init_uniform(init.classes, m.bank.total_filters(), 0.01,
                         derive_seed(init.seed, "cls"));
  m.cls_b = Matrix(init.classes, 1);
  return m;
}

DocumentModel make_document_model(ChannelSet channels, const ModelInit& init) {
  check_classes(init.classes);
  if (init.conv_only) {
    throw DomainError("document model has no conv-only ablation");
  }
  DocumentModel m;
  m.channels = std::move(channels);
  const std::size_t d = m.channels.dim();
  const std::size_t h = init.h_dim ? init.h_dim : d;
  m.dropout_rate = init.dropout_rate;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    m.sub_lstm.push_back(make_lstm_params(
        h, d, derive_seed(init.seed, "lstm", ci), init.forget_bias));
    m.high_lstm.push_back(make_lstm_params(
        h, h, derive_seed(init.seed, "hlstm", ci), init.forget_bias));
  }
  m.bank = make_filter_bank(init.filter_spec, m.channels.count(), h,
                            init.conv_nonlinearity,
                            derive_seed(init.seed, "bank"));
  m.cls_W = init_uniform(init.classes, m.bank.total_filters(), 0.01,
                         derive_seed(init.seed, "cls"));
  m.cls_b = Matrix(init.classes, 1);
  return m;
}

std::vector<std::vector<std::string>> split_subsentences(
    const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("split_subsentences: empty input");
  std::vector<std::vector<std::string>> segments;
  std::vector<std::string> current;
  for (const std::string& tok : tokens) {
    if (is_delimiter_token(tok)) {
      if (!current.empty()) segments.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(tok);
    }
  }
  if (!current.empty()) segments.push_back(std::move(current));
  if (segments.empty()) {
    throw DomainError("split_subsentences: no content between delimiters");
  }
  return segments;
}

Matrix average_pool(const Matrix& hidden) {
  if (hidden.cols() == 0) throw DomainError("average_pool: empty sequence");
  Matrix out(hidden.rows(), 1);
  const double inv = 1.0 / static_cast<double>(hidden.cols());
  for (std::size_t i = 0; i < hidden.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < hidden.cols(); ++j) s += hidden(i, j);
    out(i, 0) = s * inv;
  }
  return out;
}

Matrix dropout_apply(const Matrix& x, double rate, Mode mode,
                     std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) {
    throw DomainError("dropout: rate must be in [0, 1)");
  }
  if (mode == Mode::infer || rate == 0.0) return x;
  return hadamard(x, dropout_mask(x.rows(), x.cols(), rate, seed));
}

namespace ag {

NodeId dropout(Tape& t, NodeId x, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) {
    throw DomainError("dropout: rate must be in [0, 1)");
  }
  const Matrix& xv = t.value(x);
  Matrix mask = dropout_mask(xv.rows(), xv.cols(), rate, seed);
  Matrix value = hadamard(xv, mask);
  return t.push(std::move(value), {x}, [x, mask](Tape& tp, NodeId out) {
    if (!tp.needs_grad(x)) return;
    const Matrix& g = tp.grad_view(out);
    Matrix& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data()[i] += g.data()[i] * mask.data()[i];
  });
}

}  // namespace ag

SentenceNodes sentence_push(Tape& t, const SentenceModel& m,
                            bool as_parameters) {
  SentenceNodes nodes;
  for (const EmbeddingTable& table : m.channels.tables) {
    if (table.trainable()) {
      nodes.tables.push_back(as_parameters ? t.parameter(table.vectors())
                                           : t.constant(table.vectors()));
    } else {
      nodes.tables.push_back(kNoNode);
    }
  }
  for (const LstmParams& p : m.lstm)
    nodes.lstm.push_back(lstm_push(t, p, as_parameters));
  nodes.bank = ag::bank_push(t, m.bank, as_parameters);
  nodes.cls_W = as_parameters ? t.parameter(m.cls_W) : t.constant(m.cls_W);
  nodes.cls_b = as_parameters ? t.parameter(m.cls_b) : t.constant(m.cls_b);
  return nodes;
}

DocumentNodes document_push(Tape& t, const DocumentModel& m,
                            bool as_parameters) {
  DocumentNodes nodes;
  for (const EmbeddingTable& table : m.channels.tables) {
    if (table.trainable()) {
      nodes.tables.push_back(as_parameters ? t.parameter(table.vectors())
                                           : t.constant(table.vectors()));
    } else {
      nodes.tables.push_back(kNoNode);
    }
  }
  for (const LstmParams& p : m.sub_lstm)
    nodes.sub_lstm.push_back(lstm_push(t, p, as_parameters));
  for (const LstmParams& p : m.high_lstm)
    nodes.high_lstm.push_back(lstm_push(t, p, as_parameters));
  nodes.bank = ag::bank_push(t, m.bank, as_parameters);
  nodes.cls_W = as_parameters ? t.parameter(m.cls_W) : t.constant(m.cls_W);
  nodes.cls_b = as_parameters ? t.parameter(m.cls_b) : t.constant(m.cls_b);
  return nodes;
}

namespace {

NodeId classify(Tape& t, const FilterBank& bank,
                const dscnn::ag::BankNodes& bank_nodes,
                const std::vector<NodeId>& maps, double dropout_rate,
                NodeId cls_W, NodeId cls_b, Mode mode,
                std::uint64_t dropout_seed) {
  NodeId pooled = dscnn::ag::bank_apply_node(t, maps, bank, bank_nodes);
  if (mode == Mode::train && dropout_rate > 0.0) {
    pooled = dscnn::ag::dropout(t, pooled, dropout_rate, dropout_seed);
  }
  NodeId logits = dscnn::ag::affine_nb(t, cls_W, pooled, cls_b);
  return dscnn::ag::softmax(t, logits);
}

}  // namespace

NodeId sentence_prob_node(Tape& t, const SentenceModel& m,
                          const SentenceNodes& nodes,
                          const std::vector<std::string>& tokens, Mode mode,
                          std::uint64_t dropout_seed) {
  if (tokens.empty()) throw DomainError("sentence_forward: empty token list");
  std::vector<NodeId> maps;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    NodeId input =
        lookup_node(t, m.channels.tables[ci], nodes.tables[ci], tokens);
    if (m.conv_only) {
      maps.push_back(input);
    } else {
      maps.push_back(lstm_run_node(t, nodes.lstm[ci], input).hidden_seq);
    }
  }
  return classify(t, m.bank, nodes.bank, maps, m.dropout_rate, nodes.cls_W,
                  nodes.cls_b, mode, dropout_seed);
}

NodeId document_prob_node(Tape& t, const DocumentModel& m,
                          const DocumentNodes& nodes,
                          const std::vector<std::string>& tokens, Mode mode,
                          std::uint64_t dropout_seed) {
  const auto segments = split_subsentences(tokens);
  std::vector<NodeId> maps;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    std::vector<NodeId> pooled;
    for (const auto& segment : segments) {
      NodeId input =
          lookup_node(t, m.channels.tables[ci], nodes.tables[ci], segment);
      NodeId hidden = lstm_run_node(t, nodes.sub_lstm[ci], input).hidden_seq;
      pooled.push_back(ag::mean_cols(t, hidden));
    }
    NodeId sequence = ag::hstack(t, pooled);
    maps.push_back(lstm_run_node(t, nodes.high_lstm[ci], sequence).hidden_seq);
  }
  return classify(t, m.bank, nodes.bank, maps, m.dropout_rate, nodes.cls_W,
                  nodes.cls_b, mode, dropout_seed);
}

Matrix sentence_forward(const SentenceModel& m,
                        const std::vector<std::string>& tokens) {
  Tape t(false);
  SentenceNodes nodes = sentence_push(t, m, false);
  return t.value(sentence_prob_node(t, m, nodes, tokens, Mode::infer));
}

Matrix document_forward(const DocumentModel& m,
                        const std::vector<std::string>& tokens) {
  Tape t(false);
  DocumentNodes nodes = document_push(t, m, false);
  return t.value(document_prob_node(t, m, nodes, tokens, Mode::infer));
}

std::vector<Matrix> document_highlevel_inputs(
    const DocumentModel& m, const std::vector<std::string>& tokens) {
  const auto segments = split_subsentences(tokens);
  std::vector<Matrix> out;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    Matrix seq(m.sub_lstm[ci].hidden_dim(), segments.size());
    for (std::size_t n = 0; n < segments.size(); ++n) {
      ChannelSet one;
      one.tables.push_back(m.channels.tables[ci]);
      const Matrix input = lookup_sequence(one, segments[n])[0];
      const Matrix pooled = average_pool(lstm_run(m.sub_lstm[ci], input));
      for (std::size_t i = 0; i < pooled.rows(); ++i) seq(i, n) = pooled(i, 0);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<std::pair<std::string, Matrix*>> named_params(SentenceModel& m) {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    if (m.channels.tables[ci].trainable()) {
      out.emplace_back("emb" + std::to_string(ci),
                       &m.channels.tables[ci].vectors());
    }
  }
  for (std::size_t ci = 0; ci < m.lstm.size(); ++ci) {
    for (auto& nv : lstm_named_params(m.lstm[ci], "lstm" + std::to_string(ci)))
      out.push_back(nv);
  }
  for (FilterGroup& g : m.bank.groups) {
    out.emplace_back("conv.w" + std::to_string(g.window), &g.weights);
    out.emplace_back("conv.b" + std::to_string(g.window), &g.bias);
  }
  out.emplace_back("cls.W", &m.cls_W);
  out.emplace_back("cls.b", &m.cls_b);
  return out;
}

std::vector<NodeId> param_node_list(const SentenceModel& m,
                                    const SentenceNodes& nodes) {
  std::vector<NodeId> out;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    if (m.channels.tables[ci].trainable()) out.push_back(nodes.tables[ci]);
  }
  for (const LstmNodes& n : nodes.lstm) {
    for (NodeId id : {n.Wi, n.Wf, n.Wo, n.Wu, n.Ui, n.Uf, n.Uo, n.Uu, n.bi,
                      n.bf, n.bo, n.bu})
      out.push_back(id);
  }
  for (std::size_t g = 0; g < nodes.bank.weights.size(); ++g) {
    out.push_back(nodes.bank.weights[g]);
    out.push_back(nodes.bank.bias[g]);
  }
  out.push_back(nodes.cls_W);
  out.push_back(nodes.cls_b);
  return out;
}

std::vector<NodeId> param_node_list(const DocumentModel& m,
                                    const DocumentNodes& nodes) {
  std::vector<NodeId> out;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    if (m.channels.tables[ci].trainable()) out.push_back(nodes.tables[ci]);
  }
  auto push_lstm = [&out](const LstmNodes& n) {
    for (NodeId id : {n.Wi, n.Wf, n.Wo, n.Wu, n.Ui, n.Uf, n.Uo, n.Uu, n.bi,
                      n.bf, n.bo, n.bu})
      out.push_back(id);
  };
  for (const LstmNodes& n : nodes.sub_lstm) push_lstm(n);
  for (const LstmNodes& n : nodes.high_lstm) push_lstm(n);
  for (std::size_t g = 0; g < nodes.bank.weights.size(); ++g) {
    out.push_back(nodes.bank.weights[g]);
    out.push_back(nodes.bank.bias[g]);
  }
  out.push_back(nodes.cls_W);
  out.push_back(nodes.cls_b);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> named_params(DocumentModel& m) {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (std::size_t ci = 0; ci < m.channels.count(); ++ci) {
    if (m.channels.tables[ci].trainable()) {
      out.emplace_back("emb" + std::to_string(ci),
                       &m.channels.tables[ci].vectors());
    }
  }
  for (std::size_t ci = 0; ci < m.sub_lstm.size(); ++ci) {
    for (auto& nv :
         lstm_named_params(m.sub_lstm[ci], "lstm" + std::to_string(ci)))
      out.push_back(nv);
  }
  for (std::size_t ci = 0; ci < m.high_lstm.size(); ++ci) {
    for (auto& nv :
         lstm_named_params(m.high_lstm[ci], "hlstm" + std::to_string(ci)))
      out.push_back(nv);
  }
  for (FilterGroup& g : m.bank.groups) {
    out.emplace_back("conv.w" + std::to_string(g.window), &g.weights);
    out.emplace_back("conv.b" + std::to_string(g.window), &g.bias);
  }
  out.emplace_back("cls.W", &m.cls_W);
  out.emplace_back("cls.b", &m.cls_b);
  return out;
}

}  // namespace dscnn

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscnn/convolution.hpp"
#include "dscnn/embeddings.hpp"
#include "dscnn/recurrent.hpp"

namespace dscnn {

enum class Mode { train, infer };

/// Per-channel LSTM encoders feeding one multi-channel convolution bank,
/// max-over-time pooling, dropout and a softmax classifier.
/// With conv_only the LSTM layer is skipped and the bank reads the raw
/// embedding maps (ablation baseline).
struct SentenceModel {
  ChannelSet channels;
  std::vector<LstmParams> lstm;  // one per channel; empty when conv_only
  FilterBank bank;
  Matrix cls_W;  // K x total_filters
  Matrix cls_b;  // K x 1
  double dropout_rate = 0.5;
  bool conv_only = false;

  int classes() const { return static_cast<int>(cls_W.rows()); }
};

/// Hierarchical variant: a shared per-channel subsentence LSTM, average
/// pooling per subsentence, and a second LSTM over the pooled sequence
/// before the same convolution/classifier stack.
struct DocumentModel {
  ChannelSet channels;
  std::vector<LstmParams> sub_lstm;   // shared across subsentences
  std::vector<LstmParams> high_lstm;  // over pooled subsentence vectors
  FilterBank bank;
  Matrix cls_W;
  Matrix cls_b;
  double dropout_rate = 0.5;

  int classes() const { return static_cast<int>(cls_W.rows()); }
};

struct ModelInit {
  std::vector<std::pair<std::size_t, std::size_t>> filter_spec;
  Nonlin conv_nonlinearity = Nonlin::relu;
  std::size_t h_dim = 0;  // 0: default to the embedding dimension
  int classes = 2;
  double dropout_rate = 0.5;
  double forget_bias = 0.0;
  bool conv_only = false;
  std::uint64_t seed = 1;
};

SentenceModel make_sentence_model(ChannelSet channels, const ModelInit& init);
DocumentModel make_document_model(ChannelSet channels, const ModelInit& init);

/// Splits on the delimiter tokens , . ? ! — delimiters and empty segments
/// are dropped; with no delimiter the whole input is one segment.
std::vector<std::vector<std::string>> split_subsentences(
    const std::vector<std::string>& tokens);

/// Mean over time of an h_dim x s hidden-state matrix.
Matrix average_pool(const Matrix& hidden);

/// Inverted dropout: in train mode each entry is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); inference is identity.
Matrix dropout_apply(const Matrix& x, double rate, Mode mode,
                     std::uint64_t seed);

namespace ag {
NodeId dropout(Tape& t, NodeId x, double rate, std::uint64_t seed);
}  // namespace ag

/// Tape-resident handles to every trainable tensor of a model.
struct SentenceNodes {
  std::vector<NodeId> tables;  // kNoNode for frozen channels
  std::vector<LstmNodes> lstm;
  ag::BankNodes bank;
  NodeId cls_W = kNoNode;
  NodeId cls_b = kNoNode;
};

struct DocumentNodes {
  std::vector<NodeId> tables;
  std::vector<LstmNodes> sub_lstm;
  std::vector<LstmNodes> high_lstm;
  ag::BankNodes bank;
  NodeId cls_W = kNoNode;
  NodeId cls_b = kNoNode;
};

SentenceNodes sentence_push(Tape& t, const SentenceModel& m,
                            bool as_parameters = true);
DocumentNodes document_push(Tape& t, const DocumentModel& m,
                            bool as_parameters = true);

/// Class-probability node for one token sequence. Dropout fires only in
/// train mode and draws its mask from `dropout_seed`.
NodeId sentence_prob_node(Tape& t, const SentenceModel& m,
                          const SentenceNodes& nodes,
                          const std::vector<std::string>& tokens, Mode mode,
                          std::uint64_t dropout_seed = 0);
NodeId document_prob_node(Tape& t, const DocumentModel& m,
                          const DocumentNodes& nodes,
                          const std::vector<std::string>& tokens, Mode mode,
                          std::uint64_t dropout_seed = 0);

/// Inference-mode forward: probabilities for one input.
Matrix sentence_forward(const SentenceModel& m,
                        const std::vector<std::string>& tokens);
Matrix document_forward(const DocumentModel& m,
                        const std::vector<std::string>& tokens);

/// Per-channel high-level LSTM input sequences (h_dim x n), one column per
/// subsentence; exposed for structural checks and debugging.
std::vector<Matrix> document_highlevel_inputs(
    const DocumentModel& m, const std::vector<std::string>& tokens);

std::vector<std::pair<std::string, Matrix*>> named_params(SentenceModel& m);
std::vector<std::pair<std::string, Matrix*>> named_params(DocumentModel& m);

/// Tape node ids aligned one-to-one with named_params order.
std::vector<NodeId> param_node_list(const SentenceModel& m,
                                    const SentenceNodes& nodes);
std::vector<NodeId> param_node_list(const DocumentModel& m,
                                    const DocumentNodes& nodes);

}  // namespace dscnn

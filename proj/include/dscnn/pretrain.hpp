#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dscnn/embeddings.hpp"
#include "dscnn/model.hpp"
#include "dscnn/recurrent.hpp"
#include "dscnn/training.hpp"

namespace dscnn {

/// Sequence autoencoder for one embedding channel. The encoder reads the
/// embedded sentence; the decoder starts from the encoder's final state,
/// receives the gold previous token's embedding at each step (teacher
/// forcing, first input is a learned start symbol) and projects to
/// vocabulary logits. Input embeddings are the channel's table and stay
/// frozen here; only the listed tensors train.
struct Autoencoder {
  LstmParams encoder;
  LstmParams decoder;
  Matrix proj_W;     // |vocab| x h_dim
  Matrix proj_b;     // |vocab| x 1
  Matrix start_emb;  // d x 1
  std::vector<std::string> vocab;  // id -> token; [0] = start, [1] = unk
  std::unordered_map<std::string, int> vocab_index;

  std::size_t hidden_dim() const { return encoder.hidden_dim(); }
  int target_id(const std::string& token) const;
};

/// Vocabulary ids 0 and 1 are reserved for the start symbol and for
/// unseen reconstruction targets.
Autoencoder make_autoencoder(
    const std::vector<std::vector<std::string>>& corpus_sentences,
    std::size_t input_dim, std::size_t h_dim, std::uint64_t seed);

std::vector<std::pair<std::string, Matrix*>> named_params(Autoencoder& ae);

struct AutoencoderNodes {
  LstmNodes encoder;
  LstmNodes decoder;
  NodeId proj_W = kNoNode;
  NodeId proj_b = kNoNode;
  NodeId start_emb = kNoNode;
};

AutoencoderNodes autoencoder_push(Tape& t, const Autoencoder& ae,
                                  bool as_parameters = true);

std::vector<NodeId> param_node_list(const AutoencoderNodes& nodes);

/// Mean per-token reconstruction cross-entropy of one sentence.
NodeId autoencoder_loss_node(Tape& t, const Autoencoder& ae,
                             const AutoencoderNodes& nodes,
                             const EmbeddingTable& table,
                             const std::vector<std::string>& tokens);

double autoencoder_forward(const Autoencoder& ae, const EmbeddingTable& table,
                           const std::vector<std::string>& tokens);

/// Greedy decode: feeds its own argmax prediction back as the next input;
/// returns the predicted token per step for len(tokens) steps.
std::vector<std::string> greedy_decode(const Autoencoder& ae,
                                       const EmbeddingTable& table,
                                       const std::vector<std::string>& tokens);

struct PretrainConfig {
  std::size_t h_dim = 0;  // 0: embedding dimension
  double rho = 0.95;
  double epsilon = 1e-6;
  int patience = 5;
  int max_epochs = 50;
  int batch_size = 1;
  std::uint64_t seed = 1;
  std::string metrics_path;  // empty: none
  bool wall_timing = true;
};

/// Adadelta training with early stopping on validation reconstruction
/// loss; the best-epoch parameters are restored before returning.
Autoencoder pretrain_run(
    const EmbeddingTable& table,
    const std::vector<std::vector<std::string>>& train_sentences,
    const std::vector<std::vector<std::string>>& valid_sentences,
    const PretrainConfig& cfg);

/// Copies the trained encoder into one channel's sentence-level LSTM; all
/// other tensors are untouched.
void transfer_encoder(const Autoencoder& ae, SentenceModel& target,
                      std::size_t channel);
void transfer_encoder(const Autoencoder& ae, DocumentModel& target,
                      std::size_t channel);

/// Encoder-only checkpoint, one tensor group "ch{i}.enc.*" per channel
/// (the decoder is discarded after pretraining).
Checkpoint make_pretrain_checkpoint(
    std::vector<Autoencoder>& per_channel,
    const std::vector<std::pair<std::string, std::string>>& config);

/// Transfers every channel group present in a pretrain checkpoint into
/// the model's sentence-level LSTMs.
void apply_encoder_checkpoint(const Checkpoint& ckpt, SentenceModel& target);
void apply_encoder_checkpoint(const Checkpoint& ckpt, DocumentModel& target);

}  // namespace dscnn

#include "dscnn/pretrain.hpp"

#include <algorithm>
#include <set>

#include "dscnn/error.hpp"
#include "dscnn/init.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

namespace {
constexpr const char* kStartSymbol = "<s>";
constexpr const char* kUnkSymbol = "<unk>";
}  // namespace

int Autoencoder::target_id(const std::string& token) const {
  auto it = vocab_index.find(token);
  return it == vocab_index.end() ? 1 : it->second;
}

Autoencoder make_autoencoder(
    const std::vector<std::vector<std::string>>& corpus_sentences,
    std::size_t input_dim, std::size_t h_dim, std::uint64_t seed) {
  if (corpus_sentences.empty()) {
    throw DomainError("make_autoencoder: empty corpus");
  }
  Autoencoder ae;
  std::set<std::string> tokens;
  for (const auto& sent : corpus_sentences)
    tokens.insert(sent.begin(), sent.end());
  ae.vocab = {kStartSymbol, kUnkSymbol};
  for (const std::string& tok : tokens) {
    if (tok != kStartSymbol && tok != kUnkSymbol) ae.vocab.push_back(tok);
  }
  for (std::size_t i = 0; i < ae.vocab.size(); ++i)
    ae.vocab_index[ae.vocab[i]] = static_cast<int>(i);

  ae.encoder = make_lstm_params(h_dim, input_dim, derive_seed(seed, "enc"));
  ae.decoder = make_lstm_params(h_dim, input_dim, derive_seed(seed, "dec"));
  ae.proj_W = init_uniform(ae.vocab.size(), h_dim, 0.01,
                           derive_seed(seed, "proj"));
  ae.proj_b = Matrix(ae.vocab.size(), 1);
  ae.start_emb = init_uniform(input_dim, 1, EmbeddingTable::kOovHalfWidth,
                              derive_seed(seed, "start"));
  return ae;
}

std::vector<std::pair<std::string, Matrix*>> named_params(Autoencoder& ae) {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (auto& nv : lstm_named_params(ae.encoder, "enc")) out.push_back(nv);
  for (auto& nv : lstm_named_params(ae.decoder, "dec")) out.push_back(nv);
  out.emplace_back("proj.W", &ae.proj_W);
  out.emplace_back("proj.b", &ae.proj_b);
  out.emplace_back("start_emb", &ae.start_emb);
  return out;
}

AutoencoderNodes autoencoder_push(Tape& t, const Autoencoder& ae,
                                  bool as_parameters) {
  AutoencoderNodes nodes;
  nodes.encoder = lstm_push(t, ae.encoder, as_parameters);
  nodes.decoder = lstm_push(t, ae.decoder, as_parameters);
  nodes.proj_W = as_parameters ? t.parameter(ae.proj_W) : t.constant(ae.proj_W);
  nodes.proj_b = as_parameters ? t.parameter(ae.proj_b) : t.constant(ae.proj_b);
  nodes.start_emb =
      as_parameters ? t.parameter(ae.start_emb) : t.constant(ae.start_emb);
  return nodes;
}

std::vector<NodeId> param_node_list(const AutoencoderNodes& nodes) {
  std::vector<NodeId> out;
  for (const LstmNodes* n : {&nodes.encoder, &nodes.decoder}) {
    for (NodeId id : {n->Wi, n->Wf, n->Wo, n->Wu, n->Ui, n->Uf, n->Uo, n->Uu,
                      n->bi, n->bf, n->bo, n->bu})
      out.push_back(id);
  }
  out.push_back(nodes.proj_W);
  out.push_back(nodes.proj_b);
  out.push_back(nodes.start_emb);
  return out;
}

NodeId autoencoder_loss_node(Tape& t, const Autoencoder& ae,
                             const AutoencoderNodes& nodes,
                             const EmbeddingTable& table,
                             const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("autoencoder: empty sequence");
  // input embeddings are frozen during pretraining
  NodeId inputs = lookup_node(t, table, kNoNode, tokens);
  LstmRunNodes enc = lstm_run_node(t, nodes.encoder, inputs);

  LstmStateNodes state = enc.last;
  std::vector<NodeId> losses;
  for (std::size_t step = 0; step < tokens.size(); ++step) {
    NodeId input;
    if (step == 0) {
      input = nodes.start_emb;
    } else {
      Matrix prev(table.dim(), 1);
      const std::vector<double> v = table.vector_for(tokens[step - 1]);
      for (std::size_t i = 0; i < v.size(); ++i) prev(i, 0) = v[i];
      input = t.constant(prev);
    }
    state = lstm_step_node(t, nodes.decoder, input, state);
    NodeId logits = ag::affine_nb(t, nodes.proj_W, state.h, nodes.proj_b);
    NodeId probs = ag::softmax(t, logits);
    losses.push_back(ag::cross_entropy(t, probs, ae.target_id(tokens[step])));
  }
  NodeId total = losses[0];
  for (std::size_t i = 1; i < losses.size(); ++i)
    total = ag::add(t, total, losses[i]);
  return ag::scale(t, total, 1.0 / static_cast<double>(losses.size()));
}

double autoencoder_forward(const Autoencoder& ae, const EmbeddingTable& table,
                           const std::vector<std::string>& tokens) {
  Tape t(false);
  AutoencoderNodes nodes = autoencoder_push(t, ae, false);
  return t.value(autoencoder_loss_node(t, ae, nodes, table, tokens))(0, 0);
}

std::vector<std::string> greedy_decode(const Autoencoder& ae,
                                       const EmbeddingTable& table,
                                       const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("greedy_decode: empty sequence");
  ChannelSet one;
  one.tables.push_back(table);
  const Matrix inputs = lookup_sequence(one, tokens)[0];

  LstmState state = zero_state(ae.hidden_dim());
  Matrix x(inputs.rows(), 1);
  for (std::size_t step = 0; step < inputs.cols(); ++step) {
    for (std::size_t i = 0; i < inputs.rows(); ++i) x(i, 0) = inputs(i, step);
    state = lstm_step(ae.encoder, x, state);
  }

  std::vector<std::string> decoded;
  Matrix input = ae.start_emb;
  for (std::size_t step = 0; step < tokens.size(); ++step) {
    state = lstm_step(ae.decoder, input, state);
    const Matrix logits = add(matmul(ae.proj_W, state.h), ae.proj_b);
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.rows(); ++k) {
      if (logits(k, 0) > logits(best, 0)) best = k;
    }
    const std::string& tok = ae.vocab[best];
    decoded.push_back(tok);
    if (tok == ae.vocab[0]) {
      input = ae.start_emb;
    } else {
      const std::vector<double> v = table.vector_for(tok);
      for (std::size_t i = 0; i < v.size(); ++i) input(i, 0) = v[i];
    }
  }
  return decoded;
}

Autoencoder pretrain_run(
    const EmbeddingTable& table,
    const std::vector<std::vector<std::string>>& train_sentences,
    const std::vector<std::vector<std::string>>& valid_sentences,
    const PretrainConfig& cfg) {
  if (train_sentences.empty()) {
    throw DomainError("pretrain_run: empty corpus");
  }
  const std::size_t h = cfg.h_dim ? cfg.h_dim : table.dim();
  std::vector<std::vector<std::string>> vocab_source = train_sentences;
  vocab_source.insert(vocab_source.end(), valid_sentences.begin(),
                      valid_sentences.end());
  Autoencoder ae =
      make_autoencoder(vocab_source, table.dim(), h, derive_seed(cfg.seed, "ae"));

  // adapt sentences to the shared train loop
  std::vector<Example> train_examples;
  for (const auto& sent : train_sentences)
    train_examples.push_back(Example{sent, 0, 0});

  ModelHooks hooks;
  hooks.params = [&ae] { return named_params(ae); };
  hooks.example_loss = [&ae, &table](Tape& t, const Example& ex,
                                     std::uint64_t) {
    AutoencoderNodes nodes = autoencoder_push(t, ae, true);
    NodeId loss = autoencoder_loss_node(t, ae, nodes, table, ex.tokens);
    return std::make_pair(loss, param_node_list(nodes));
  };

  const auto& valid_ref =
      valid_sentences.empty() ? train_sentences : valid_sentences;
  auto valid_metric = [&ae, &table, &valid_ref] {
    double total = 0.0;
    for (const auto& sent : valid_ref)
      total += autoencoder_forward(ae, table, sent);
    const double mean = total / static_cast<double>(valid_ref.size());
    return std::make_pair(-mean, mean);  // lower loss is better
  };

  Split split;
  split.train = train_examples;

  TrainLoopConfig loop;
  loop.rho = cfg.rho;
  loop.epsilon = cfg.epsilon;
  loop.patience = cfg.patience;
  loop.max_epochs = cfg.max_epochs;
  loop.batch_size = cfg.batch_size;
  loop.seed = cfg.seed;
  loop.metrics_path = cfg.metrics_path;
  loop.wall_timing = cfg.wall_timing;
  train_run(hooks, split, loop, valid_metric);
  return ae;
}

namespace {

void copy_lstm(const LstmParams& from, LstmParams& to,
               const std::string& what) {
  if (from.hidden_dim() != to.hidden_dim() ||
      from.input_dim() != to.input_dim()) {
    throw DimensionError("transfer_encoder: encoder is " +
                         std::to_string(from.hidden_dim()) + "x" +
                         std::to_string(from.input_dim()) + ", " + what +
                         " expects " + std::to_string(to.hidden_dim()) + "x" +
                         std::to_string(to.input_dim()));
  }
  to = from;
}

}  // namespace

void transfer_encoder(const Autoencoder& ae, SentenceModel& target,
                      std::size_t channel) {
  if (channel >= target.lstm.size()) {
    throw DomainError("transfer_encoder: channel out of range");
  }
  copy_lstm(ae.encoder, target.lstm[channel], "sentence LSTM");
}

void transfer_encoder(const Autoencoder& ae, DocumentModel& target,
                      std::size_t channel) {
  if (channel >= target.sub_lstm.size()) {
    throw DomainError("transfer_encoder: channel out of range");
  }
  copy_lstm(ae.encoder, target.sub_lstm[channel], "subsentence LSTM");
}

Checkpoint make_pretrain_checkpoint(
    std::vector<Autoencoder>& per_channel,
    const std::vector<std::pair<std::string, std::string>>& config) {
  Checkpoint ckpt;
  ckpt.kind = "pretrain";
  ckpt.config = config;
  for (std::size_t ci = 0; ci < per_channel.size(); ++ci) {
    const std::string prefix = "ch" + std::to_string(ci) + ".enc";
    for (auto& [name, m] :
         lstm_named_params(per_channel[ci].encoder, prefix)) {
      ckpt.tensors.emplace_back(name, *m);
    }
  }
  return ckpt;
}

namespace {

void apply_encoders(const Checkpoint& ckpt, std::vector<LstmParams>& lstms) {
  if (ckpt.kind != "pretrain") {
    throw FormatError("checkpoint kind '" + ckpt.kind + "' is not pretrain");
  }
  std::size_t applied = 0;
  for (std::size_t ci = 0; ci < lstms.size(); ++ci) {
    const std::string prefix = "ch" + std::to_string(ci) + ".enc";
    if (!ckpt.find_tensor(prefix + ".Wi")) continue;
    LstmParams loaded = lstms[ci];
    load_params(ckpt, lstm_named_params(loaded, prefix));
    copy_lstm(loaded, lstms[ci], "channel " + std::to_string(ci) + " LSTM");
    ++applied;
  }
  if (applied == 0) {
    throw FormatError("pretrain checkpoint has no encoder for any channel");
  }
}

}  // namespace

void apply_encoder_checkpoint(const Checkpoint& ckpt, SentenceModel& target) {
  apply_encoders(ckpt, target.lstm);
}

void apply_encoder_checkpoint(const Checkpoint& ckpt, DocumentModel& target) {
  apply_encoders(ckpt, target.sub_lstm);
}

}  // namespace dscnn

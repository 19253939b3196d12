#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscnn/embeddings.hpp"
#include "dscnn/matrix.hpp"

namespace dscnn {

/// Everything a run needs; defaults are the reference training recipe
/// (3/4/5-window filters, 100 each, ReLU, dropout 0.5, Adadelta with
/// rho 0.95 / eps 1e-6, early stopping patience 5).
struct RunConfig {
  std::string mode = "sentence";  // sentence | document
  std::vector<std::string> embeddings;  // glove:P | w2v:P | random:DIM
  std::size_t hdim = 0;                 // 0: embedding dimension
  std::string filters = "3:100,4:100,5:100";
  std::string nonlinearity = "relu";  // relu | tanh
  double dropout = 0.5;
  double rho = 0.95;
  double epsilon = 1e-6;
  int patience = 5;
  int max_epochs = 50;
  int batch_size = 1;
  double grad_clip = 0.0;
  std::uint64_t seed = 1;
  std::string kfold;  // "K:F" or empty
  double valid_fraction = 0.1;
  bool trainable_embeddings = false;
  double forget_bias = 0.0;
  bool conv_only = false;
  std::string timing = "wall";  // wall | none
  std::string init_encoder;
  std::string data;
  std::string valid;
  std::string test;
  std::string out;
};

/// Applies one key=value assignment; unknown keys are format errors.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);

/// Line-oriented key=value file; blank lines and '#' comments allowed.
/// File entries override the passed-in base (defaults), so command-line
/// flags applied afterwards win over the file.
RunConfig load_config_file(const std::string& path, RunConfig base);

/// The resolved configuration as the same key=value text; a run directory
/// holding this file reproduces the run.
std::string serialize_config(const RunConfig& cfg);

std::vector<std::pair<std::string, std::string>> config_kv(
    const RunConfig& cfg);

/// Parses "K:F".
std::pair<int, int> parse_kfold(const std::string& spec);

/// Loads or creates the embedding channels named by the config.
ChannelSet build_channels(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace dscnn

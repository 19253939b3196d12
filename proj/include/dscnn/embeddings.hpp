#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dscnn/matrix.hpp"
#include "dscnn/tape.hpp"

namespace dscnn {

/// One version ("channel") of word vectors: token -> row of `vectors`.
/// Unknown tokens resolve to deterministic uniform vectors in
/// [-oov_half_width, +oov_half_width] keyed by (token, channel, seed), so a
/// repeated unknown token always maps to the same vector.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::uint64_t oov_seed, int channel_index);

  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  bool trainable() const { return trainable_; }
  void set_trainable(bool value) { trainable_ = value; }

  void add(const std::string& token, const std::vector<double>& vec);

  /// Appends many rows with a single reallocation; duplicates are skipped
  /// (first occurrence wins, as in add).
  void add_batch(const std::vector<std::pair<std::string, std::vector<double>>>& rows);

  /// Case-sensitive match first, lowercase fallback, else nullopt.
  std::optional<std::size_t> find(const std::string& token) const;

  /// Row for a known token, or the deterministic unknown-token vector.
  std::vector<double> vector_for(const std::string& token) const;

  /// Appends unknown-token rows for every token not yet present so that a
  /// trainable table owns every row it will be asked for. Tokens are added
  /// in sorted order to keep row numbering reproducible.
  void materialize(const std::vector<std::string>& tokens);

  const Matrix& vectors() const { return vectors_; }
  Matrix& vectors() { return vectors_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static constexpr double kOovHalfWidth = 0.25;

 private:
  std::vector<double> oov_vector(const std::string& token) const;

  std::size_t dim_;
  std::uint64_t oov_seed_;
  int channel_index_;
  bool trainable_ = false;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<std::string> tokens_;
  Matrix vectors_;  // |vocab| x dim
};

struct ChannelSet {
  std::vector<EmbeddingTable> tables;
  std::size_t count() const { return tables.size(); }
  std::size_t dim() const;
};

/// GloVe text format: one line per word, token then d decimals. The
/// dimension is inferred from the first line.
EmbeddingTable load_glove_text(const std::string& path,
                               std::uint64_t oov_seed, int channel_index,
                               std::optional<std::size_t> max_vocab = {});

/// word2vec binary format: ASCII header "count dim\n", then per word a
/// space-terminated token followed by dim little-endian float32 values.
EmbeddingTable load_word2vec_binary(const std::string& path,
                                    std::uint64_t oov_seed, int channel_index,
                                    std::optional<std::size_t> max_vocab = {});

void write_word2vec_binary(const EmbeddingTable& table,
                           const std::string& path);

/// Per-channel d x s embedding matrices for a token sequence.
std::vector<Matrix> lookup_sequence(const ChannelSet& channels,
                                    const std::vector<std::string>& tokens);

/// Recorded lookup: a frozen table contributes a constant node; a
/// trainable one is gathered from `table_node` so gradients reach its rows.
NodeId lookup_node(Tape& t, const EmbeddingTable& table, NodeId table_node,
                   const std::vector<std::string>& tokens);

}  // namespace dscnn

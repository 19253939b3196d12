#include "dscnn/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "dscnn/error.hpp"
#include "dscnn/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "word2vec binary reader assumes a little-endian host");

namespace dscnn {

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t oov_seed,
                               int channel_index)
    : dim_(dim), oov_seed_(oov_seed), channel_index_(channel_index) {
  if (dim == 0) throw DomainError("embedding dimension must be positive");
}

void EmbeddingTable::add(const std::string& token,
                         const std::vector<double>& vec) {
  add_batch({{token, vec}});
}

void EmbeddingTable::add_batch(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::vector<const std::pair<std::string, std::vector<double>>*> fresh;
  std::set<std::string> batch_seen;
  for (const auto& row : rows) {
    if (row.second.size() != dim_) {
      throw DimensionError("embedding vector for '" + row.first +
                           "' has size " + std::to_string(row.second.size()) +
                           ", table dim is " + std::to_string(dim_));
    }
    if (vocab_.count(row.first) || batch_seen.count(row.first)) continue;
    batch_seen.insert(row.first);
    fresh.push_back(&row);
  }
  if (fresh.empty()) return;
  const std::size_t old_rows = tokens_.size();
  Matrix grown(old_rows + fresh.size(), dim_);
  std::memcpy(grown.data(), vectors_.data(), vectors_.size() * sizeof(double));
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    const std::size_t row = old_rows + k;
    vocab_[fresh[k]->first] = row;
    tokens_.push_back(fresh[k]->first);
    for (std::size_t j = 0; j < dim_; ++j) grown(row, j) = fresh[k]->second[j];
  }
  vectors_ = std::move(grown);
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& token) const {
  auto it = vocab_.find(token);
  if (it != vocab_.end()) return it->second;
  it = vocab_.find(lowercase(token));
  if (it != vocab_.end()) return it->second;
  return std::nullopt;
}

std::vector<double> EmbeddingTable::oov_vector(const std::string& token) const {
  Rng rng(derive_seed(oov_seed_, "oov", fnv1a(token),
                      static_cast<std::uint64_t>(channel_index_)));
  std::vector<double> v(dim_);
  for (double& x : v) x = rng.uniform(-kOovHalfWidth, kOovHalfWidth);
  return v;
}

std::vector<double> EmbeddingTable::vector_for(const std::string& token) const {
  if (auto row = find(token)) {
    std::vector<double> v(dim_);
    for (std::size_t j = 0; j < dim_; ++j) v[j] = vectors_(*row, j);
    return v;
  }
  return oov_vector(token);
}

void EmbeddingTable::materialize(const std::vector<std::string>& tokens) {
  std::set<std::string> missing;
  for (const std::string& tok : tokens) {
    if (!find(tok)) missing.insert(tok);
  }
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  rows.reserve(missing.size());
  for (const std::string& tok : missing) rows.emplace_back(tok, oov_vector(tok));
  add_batch(rows);
}

std::size_t ChannelSet::dim() const {
  if (tables.empty()) throw DomainError("channel set is empty");
  const std::size_t d = tables.front().dim();
  for (const EmbeddingTable& t : tables) {
    if (t.dim() != d) {
      throw DimensionError("channels disagree on embedding dimension");
    }
  }
  return d;
}

EmbeddingTable load_glove_text(const std::string& path,
                               std::uint64_t oov_seed, int channel_index,
                               std::optional<std::size_t> max_vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string line;
  long line_no = 0;
  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vec;
    double x;
    while (fields >> x) vec.push_back(x);
    if (!fields.eof()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": non-numeric vector entry");
    }
    if (vec.empty()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": no vector values");
    }
    if (rows.empty()) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, got " +
                        std::to_string(vec.size()));
    }
    rows.emplace_back(std::move(token), std::move(vec));
    if (max_vocab && rows.size() >= *max_vocab) break;
  }
  if (rows.empty()) throw FormatError(path + ": no embedding lines");
  EmbeddingTable table(dim, oov_seed, channel_index);
  table.add_batch(rows);
  return table;
}

EmbeddingTable load_word2vec_binary(const std::string& path,
                                    std::uint64_t oov_seed, int channel_index,
                                    std::optional<std::size_t> max_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError(path + ": missing header line");
  }
  std::istringstream hs(header);
  long long count = 0, dim = 0;
  if (!(hs >> count >> dim) || count < 0 || dim <= 0) {
    throw FormatError(path + ": malformed header '" + header + "'");
  }
  const std::size_t want = max_vocab
      ? std::min<std::size_t>(*max_vocab, static_cast<std::size_t>(count))
      : static_cast<std::size_t>(count);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  rows.reserve(want);
  std::vector<float> raw(static_cast<std::size_t>(dim));
  for (std::size_t w = 0; w < want; ++w) {
    std::string token;
    char c;
    while (in.get(c) && c != ' ') {
      if (c != '\n') token.push_back(c);
    }
    if (!in) {
      throw FormatError(path + ": truncated at word " + std::to_string(w) +
                        " of " + std::to_string(count));
    }
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (in.gcount() !=
        static_cast<std::streamsize>(raw.size() * sizeof(float))) {
      throw FormatError(path + ": expected " +
                        std::to_string(raw.size() * sizeof(float)) +
                        " payload bytes for word " + std::to_string(w) +
                        ", got " + std::to_string(in.gcount()));
    }
    std::vector<double> vec(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j)
      vec[j] = static_cast<double>(raw[j]);
    rows.emplace_back(std::move(token), std::move(vec));
  }
  EmbeddingTable table(static_cast<std::size_t>(dim), oov_seed, channel_index);
  table.add_batch(rows);
  return table;
}

void write_word2vec_binary(const EmbeddingTable& table,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out << table.vocab_size() << ' ' << table.dim() << '\n';
  std::vector<float> raw(table.dim());
  for (std::size_t r = 0; r < table.vocab_size(); ++r) {
    out << table.tokens()[r] << ' ';
    for (std::size_t j = 0; j < table.dim(); ++j)
      raw[j] = static_cast<float>(table.vectors()(r, j));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Matrix> lookup_sequence(const ChannelSet& channels,
                                    const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("lookup_sequence: empty token list");
  const std::size_t d = channels.dim();
  std::vector<Matrix> out;
  out.reserve(channels.count());
  for (const EmbeddingTable& table : channels.tables) {
    Matrix m(d, tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::vector<double> v = table.vector_for(tokens[t]);
      for (std::size_t i = 0; i < d; ++i) m(i, t) = v[i];
    }
    out.push_back(std::move(m));
  }
  return out;
}

NodeId lookup_node(Tape& t, const EmbeddingTable& table, NodeId table_node,
                   const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("lookup_node: empty token list");
  if (!table.trainable() || table_node == kNoNode) {
    ChannelSet one;
    one.tables.push_back(table);
    return t.constant(lookup_sequence(one, tokens)[0]);
  }
  // gather columns out of the table node; rows of the table become columns
  const Matrix& tm = t.value(table_node);
  std::vector<std::size_t> rows(tokens.size());
  Matrix value(table.dim(), tokens.size());
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto row = table.find(tokens[k]);
    if (row) {
      rows[k] = *row;
      for (std::size_t i = 0; i < table.dim(); ++i)
        value(i, k) = tm(*row, i);
    } else {
      // unmaterialized unknown token: frozen deterministic vector
      rows[k] = static_cast<std::size_t>(-1);
      const std::vector<double> v = table.vector_for(tokens[k]);
      for (std::size_t i = 0; i < table.dim(); ++i) value(i, k) = v[i];
    }
  }
  return t.push(std::move(value), {table_node},
                [table_node, rows](Tape& tp, NodeId out) {
    if (!tp.needs_grad(table_node)) return;
    const Matrix& g = tp.grad_view(out);
    Matrix& gt = tp.grad(table_node);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k] == static_cast<std::size_t>(-1)) continue;
      for (std::size_t i = 0; i < g.rows(); ++i)
        gt(rows[k], i) += g(i, k);
    }
  });
}

}  // namespace dscnn

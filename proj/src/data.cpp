#include "dscnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dscnn/error.hpp"
#include "dscnn/rng.hpp"

namespace fs = std::filesystem;

namespace dscnn {

namespace {

bool is_delim(char c) {
  return c == ',' || c == '.' || c == '?' || c == '!';
}

Corpus finish(std::vector<std::pair<std::string, Example>> raw) {
  if (raw.empty()) throw DomainError("corpus is empty");
  std::vector<std::string> names;
  for (const auto& [label, ex] : raw) names.push_back(label);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i)
    index[names[i]] = static_cast<int>(i);
  Corpus corpus;
  corpus.label_names = names;
  long next_id = 0;
  for (auto& [label, ex] : raw) {
    ex.label = index[label];
    ex.id = next_id++;
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::string spaced;
  spaced.reserve(text.size() * 2);
  for (char c : text) {
    if (is_delim(c)) {
      spaced.push_back(' ');
      spaced.push_back(c);
      spaced.push_back(' ');
    } else {
      spaced.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    }
  }
  std::vector<std::string> tokens;
  std::istringstream in(spaced);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.empty()) throw DomainError("tokenize: no tokens in text");
  return tokens;
}

Corpus load_labeled_corpus(const std::string& path, CorpusFormat format) {
  std::vector<std::pair<std::string, Example>> raw;
  if (format == CorpusFormat::tsv_label_text) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": missing tab between label and text");
      }
      const std::string label = line.substr(0, tab);
      const std::string text = line.substr(tab + 1);
      if (label.empty()) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": empty label");
      }
      Example ex;
      ex.tokens = tokenize(text);
      raw.emplace_back(label, std::move(ex));
    }
  } else {
    if (!fs::is_directory(path)) {
      throw IoError("not a directory: " + path);
    }
    std::vector<std::string> class_dirs;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_directory()) class_dirs.push_back(entry.path().filename());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    for (const std::string& label : class_dirs) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(fs::path(path) / label)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open document: " + file.string());
        std::stringstream buffer;
        buffer << in.rdbuf();
        Example ex;
        ex.tokens = tokenize(buffer.str());
        raw.emplace_back(label, std::move(ex));
      }
    }
  }
  return finish(std::move(raw));
}

Split kfold_split(const std::vector<Example>& examples, int k, int fold,
                  double valid_fraction, std::uint64_t seed) {
  if (k < 2) throw DomainError("kfold_split: k must be >= 2");
  if (fold < 0 || fold >= k) throw DomainError("kfold_split: fold out of range");
  if (valid_fraction < 0.0 || valid_fraction >= 1.0) {
    throw DomainError("kfold_split: valid_fraction out of [0,1)");
  }
  const std::size_t n = examples.size();
  if (n < static_cast<std::size_t>(k)) {
    throw DomainError("kfold_split: fewer examples than folds");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "kfold-shuffle"));
  rng.shuffle(order);

  // contiguous chunks of the shuffled order; sizes differ by at most one
  const std::size_t lo = n * fold / k;
  const std::size_t hi = n * (fold + 1) / k;

  Split split;
  std::vector<Example> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= lo && i < hi) {
      split.test.push_back(examples[order[i]]);
    } else {
      rest.push_back(examples[order[i]]);
    }
  }
  const std::size_t n_valid =
      static_cast<std::size_t>(rest.size() * valid_fraction);
  split.valid.assign(rest.begin(), rest.begin() + n_valid);
  split.train.assign(rest.begin() + n_valid, rest.end());
  if (split.train.empty()) throw DomainError("kfold_split: empty train part");
  return split;
}

Split fixed_split(const std::vector<Example>& train,
                  const std::vector<Example>& valid,
                  const std::vector<Example>& test, double valid_fraction,
                  std::uint64_t seed) {
  Split split;
  split.valid = valid;
  split.test = test;
  if (!valid.empty() || valid_fraction <= 0.0) {
    split.train = train;
    return split;
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "valid-carve"));
  rng.shuffle(order);
  const std::size_t n_valid =
      static_cast<std::size_t>(train.size() * valid_fraction);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_valid) {
      split.valid.push_back(train[order[i]]);
    } else {
      split.train.push_back(train[order[i]]);
    }
  }
  if (split.train.empty()) throw DomainError("fixed_split: empty train part");
  return split;
}

Corpus synth_longdep(int n_examples, int seq_len, int vocab_size, int gap,
                     std::uint64_t seed) {
  if (n_examples < 1) throw DomainError("synth_longdep: n_examples < 1");
  if (vocab_size < 2) throw DomainError("synth_longdep: vocab_size < 2");
  if (gap < 1 || gap >= seq_len) {
    throw DomainError("synth_longdep: need 1 <= gap < seq_len");
  }
  Rng rng(derive_seed(seed, "synth"));
  Corpus corpus;
  corpus.label_names = {"0", "1"};
  for (int e = 0; e < n_examples; ++e) {
    Example ex;
    ex.id = e;
    ex.label = e % 2;  // balanced within one example
    ex.tokens.resize(seq_len);
    for (int p = 0; p < seq_len; ++p) {
      ex.tokens[p] = "t" + std::to_string(rng.index(vocab_size));
    }
    const std::size_t anchor = rng.index(vocab_size);
    ex.tokens[0] = "t" + std::to_string(anchor);
    if (ex.label == 1) {
      ex.tokens[gap] = ex.tokens[0];
    } else {
      const std::size_t other =
          (anchor + 1 + rng.index(vocab_size - 1)) % vocab_size;
      ex.tokens[gap] = "t" + std::to_string(other);
    }
    corpus.examples.push_back(std::move(ex));
  }
  Rng shuffle_rng(derive_seed(seed, "synth-shuffle"));
  shuffle_rng.shuffle(corpus.examples);
  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    corpus.examples[i].id = static_cast<long>(i);
  return corpus;
}

void write_tsv(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const Example& ex : corpus.examples) {
    out << corpus.label_names[ex.label] << '\t';
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out << ' ';
      out << ex.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dscnn

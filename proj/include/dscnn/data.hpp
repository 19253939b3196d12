#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dscnn {

struct Example {
  std::vector<std::string> tokens;
  int label = 0;
  long id = 0;
};

struct Corpus {
  std::vector<Example> examples;
  std::vector<std::string> label_names;  // index -> name, sorted order
  int classes() const { return static_cast<int>(label_names.size()); }
};

enum class CorpusFormat { tsv_label_text, dir_per_class };

/// tsv_label_text: one example per line, "label<TAB>text".
/// dir_per_class: one subdirectory per label, one document per file.
/// Labels map to indices in sorted order; ingestion order is stable.
Corpus load_labeled_corpus(const std::string& path, CorpusFormat format);

/// Lowercases, isolates the four delimiter marks , . ? ! as standalone
/// tokens and splits on whitespace.
std::vector<std::string> tokenize(const std::string& text);

struct Split {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

/// One seeded shuffle; fold `fold` of k becomes the test part and
/// `valid_fraction` of the remainder the validation part.
Split kfold_split(const std::vector<Example>& examples, int k, int fold,
                  double valid_fraction, std::uint64_t seed);

/// Seeded carve-out of a validation part from a fixed training set.
Split fixed_split(const std::vector<Example>& train,
                  const std::vector<Example>& valid,
                  const std::vector<Example>& test, double valid_fraction,
                  std::uint64_t seed);

/// Synthetic long-range dependency task: label 1 iff the token at position
/// 0 equals the token at position `gap`; all other positions are
/// uninformative uniform fillers. Classes balanced within one example.
Corpus synth_longdep(int n_examples, int seq_len, int vocab_size, int gap,
                     std::uint64_t seed);

void write_tsv(const Corpus& corpus, const std::string& path);

}  // namespace dscnn

// Command-line front end: train, eval, pretrain, gradcheck, synth.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dscnn/config.hpp"
#include "dscnn/data.hpp"
#include "dscnn/error.hpp"
#include "dscnn/gradcheck.hpp"
#include "dscnn/model.hpp"
#include "dscnn/pretrain.hpp"
#include "dscnn/rng.hpp"
#include "dscnn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> embeddings;
  std::optional<std::string> mode;
  std::optional<std::size_t> hdim;
  std::optional<std::string> filters;
  std::optional<std::string> nonlinearity;
  std::optional<double> dropout;
  std::optional<double> rho;
  std::optional<double> epsilon;
  std::optional<int> patience;
  std::optional<int> max_epochs;
  std::optional<int> batch_size;
  std::optional<double> grad_clip;
  std::optional<long> seed;
  std::optional<std::string> kfold;
  std::optional<double> valid_fraction;
  std::optional<bool> trainable_embeddings;
  std::optional<double> forget_bias;
  std::optional<bool> conv_only;
  std::optional<std::string> timing;
  std::optional<std::string> init_encoder;
  std::optional<std::string> data;
  std::optional<std::string> valid;
  std::optional<std::string> test;
  std::optional<std::string> out;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value config file");
  cmd->add_option("--embeddings", f.embeddings,
                  "channel spec glove:PATH | w2v:PATH | random:DIM "
                  "(repeat per channel)");
  cmd->add_option("--mode", f.mode, "sentence | document");
  cmd->add_option("--hdim", f.hdim, "LSTM hidden size (0: embedding dim)");
  cmd->add_option("--filters", f.filters, "window:count list, e.g. 3:100,4:100,5:100");
  cmd->add_option("--nonlinearity", f.nonlinearity, "conv nonlinearity relu | tanh");
  cmd->add_option("--dropout", f.dropout, "dropout rate before the classifier");
  cmd->add_option("--rho", f.rho, "Adadelta decay");
  cmd->add_option("--epsilon", f.epsilon, "Adadelta epsilon");
  cmd->add_option("--patience", f.patience, "early stopping patience (epochs)");
  cmd->add_option("--max-epochs", f.max_epochs, "epoch cap");
  cmd->add_option("--batch-size", f.batch_size, "gradient accumulation size");
  cmd->add_option("--grad-clip", f.grad_clip, "global-norm clip (0: off)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--kfold", f.kfold, "K:F cross-validation fold");
  cmd->add_option("--valid-fraction", f.valid_fraction,
                  "validation carve-out when no valid set is given");
  cmd->add_option("--trainable-embeddings", f.trainable_embeddings,
                  "fine-tune embedding channels");
  cmd->add_option("--forget-bias", f.forget_bias, "LSTM forget gate bias");
  cmd->add_option("--conv-only", f.conv_only, "ablation: drop the LSTM layer");
  cmd->add_option("--timing", f.timing, "metrics wall clock: wall | none");
  cmd->add_option("--init-encoder", f.init_encoder,
                  "pretrain checkpoint to transfer encoders from");
  cmd->add_option("--data", f.data, "training data (tsv: label<TAB>text)");
  cmd->add_option("--valid", f.valid, "validation data");
  cmd->add_option("--test", f.test, "test data");
  cmd->add_option("--out", f.out, "output directory");
}

dscnn::RunConfig resolve_config(const CommonFlags& f) {
  dscnn::RunConfig cfg;
  if (!f.config_path.empty()) {
    cfg = dscnn::load_config_file(f.config_path, cfg);
  }
  if (!f.embeddings.empty()) {
    cfg.embeddings = f.embeddings;
  }
  if (f.mode) cfg.mode = *f.mode;
  if (f.hdim) cfg.hdim = *f.hdim;
  if (f.filters) cfg.filters = *f.filters;
  if (f.nonlinearity) cfg.nonlinearity = *f.nonlinearity;
  if (f.dropout) cfg.dropout = *f.dropout;
  if (f.rho) cfg.rho = *f.rho;
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.patience) cfg.patience = *f.patience;
  if (f.max_epochs) cfg.max_epochs = *f.max_epochs;
  if (f.batch_size) cfg.batch_size = *f.batch_size;
  if (f.grad_clip) cfg.grad_clip = *f.grad_clip;
  if (f.seed) cfg.seed = static_cast<std::uint64_t>(*f.seed);
  if (f.kfold) cfg.kfold = *f.kfold;
  if (f.valid_fraction) cfg.valid_fraction = *f.valid_fraction;
  if (f.trainable_embeddings) cfg.trainable_embeddings = *f.trainable_embeddings;
  if (f.forget_bias) cfg.forget_bias = *f.forget_bias;
  if (f.conv_only) cfg.conv_only = *f.conv_only;
  if (f.timing) cfg.timing = *f.timing;
  if (f.init_encoder) cfg.init_encoder = *f.init_encoder;
  if (f.data) cfg.data = *f.data;
  if (f.valid) cfg.valid = *f.valid;
  if (f.test) cfg.test = *f.test;
  if (f.out) cfg.out = *f.out;
  dscnn::validate_config(cfg);
  return cfg;
}

dscnn::Corpus load_corpus_checked(const std::string& path) {
  if (path.empty()) throw dscnn::DomainError("no data path given");
  if (!fs::exists(path)) {
    throw dscnn::IoError("data path does not exist: " + path);
  }
  const auto format = fs::is_directory(path)
                          ? dscnn::CorpusFormat::dir_per_class
                          : dscnn::CorpusFormat::tsv_label_text;
  return dscnn::load_labeled_corpus(path, format);
}

dscnn::Split make_split(const dscnn::RunConfig& cfg,
                        const dscnn::Corpus& corpus) {
  if (!cfg.kfold.empty()) {
    const auto [k, fold] = dscnn::parse_kfold(cfg.kfold);
    return dscnn::kfold_split(corpus.examples, k, fold, cfg.valid_fraction,
                              cfg.seed);
  }
  std::vector<dscnn::Example> valid, test;
  if (!cfg.valid.empty()) {
    valid = load_corpus_checked(cfg.valid).examples;
  }
  if (!cfg.test.empty()) {
    test = load_corpus_checked(cfg.test).examples;
  }
  return dscnn::fixed_split(corpus.examples, valid, test, cfg.valid_fraction,
                            cfg.seed);
}

std::vector<std::string> corpus_token_union(
    const std::vector<dscnn::Example>& examples) {
  std::vector<std::string> tokens;
  for (const auto& ex : examples)
    tokens.insert(tokens.end(), ex.tokens.begin(), ex.tokens.end());
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dscnn::IoError("cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------- train

int cmd_train(const CommonFlags& flags) {
  dscnn::RunConfig cfg = resolve_config(flags);
  if (cfg.out.empty()) throw dscnn::DomainError("train: --out is required");
  fs::create_directories(cfg.out);

  const dscnn::Corpus corpus = load_corpus_checked(cfg.data);
  dscnn::Split split = make_split(cfg, corpus);
  if (split.valid.empty()) {
    throw dscnn::DomainError(
        "train: no validation examples (give --valid or valid_fraction > 0)");
  }

  dscnn::ChannelSet channels = dscnn::build_channels(cfg);
  std::vector<std::string> extra_vocab_lines;
  if (cfg.trainable_embeddings) {
    const std::vector<std::string> train_tokens =
        corpus_token_union(split.train);
    for (std::size_t ci = 0; ci < channels.count(); ++ci) {
      const std::size_t before = channels.tables[ci].vocab_size();
      channels.tables[ci].materialize(train_tokens);
      std::vector<std::string> appended(
          channels.tables[ci].tokens().begin() + before,
          channels.tables[ci].tokens().end());
      extra_vocab_lines.push_back(join_tokens(appended));
    }
  }

  dscnn::ModelInit init;
  init.filter_spec = dscnn::parse_filter_spec(cfg.filters);
  init.conv_nonlinearity = dscnn::nonlin_from_name(cfg.nonlinearity);
  init.h_dim = cfg.hdim;
  init.classes = corpus.classes();
  init.dropout_rate = cfg.dropout;
  init.forget_bias = cfg.forget_bias;
  init.conv_only = cfg.conv_only;
  init.seed = dscnn::derive_seed(cfg.seed, "init");

  dscnn::TrainLoopConfig loop;
  loop.rho = cfg.rho;
  loop.epsilon = cfg.epsilon;
  loop.patience = cfg.patience;
  loop.max_epochs = cfg.max_epochs;
  loop.batch_size = cfg.batch_size;
  loop.grad_clip = cfg.grad_clip;
  loop.seed = cfg.seed;
  loop.metrics_path = (fs::path(cfg.out) / "metrics.csv").string();
  loop.wall_timing = cfg.timing == "wall";

  auto config_entries = dscnn::config_kv(cfg);
  config_entries.emplace_back("classes", std::to_string(corpus.classes()));
  config_entries.emplace_back("labels", join_tokens(corpus.label_names));
  for (std::size_t ci = 0; ci < extra_vocab_lines.size(); ++ci) {
    config_entries.emplace_back("emb" + std::to_string(ci) + ".vocab",
                                extra_vocab_lines[ci]);
  }

  dscnn::TrainRunResult result;
  dscnn::Checkpoint ckpt;
  if (cfg.mode == "sentence") {
    dscnn::SentenceModel model =
        dscnn::make_sentence_model(std::move(channels), init);
    if (!cfg.init_encoder.empty()) {
      dscnn::apply_encoder_checkpoint(
          dscnn::load_checkpoint(cfg.init_encoder), model);
    }
    dscnn::ModelHooks hooks = dscnn::hooks_for(model);
    result = dscnn::train_run(hooks, split, loop);
    ckpt = dscnn::make_checkpoint("model", config_entries,
                                  dscnn::named_params(model));
  } else {
    dscnn::DocumentModel model =
        dscnn::make_document_model(std::move(channels), init);
    if (!cfg.init_encoder.empty()) {
      dscnn::apply_encoder_checkpoint(
          dscnn::load_checkpoint(cfg.init_encoder), model);
    }
    dscnn::ModelHooks hooks = dscnn::hooks_for(model);
    result = dscnn::train_run(hooks, split, loop);
    ckpt = dscnn::make_checkpoint("model", config_entries,
                                  dscnn::named_params(model));
  }

  dscnn::save_checkpoint(ckpt, (fs::path(cfg.out) / "checkpoint.dscnn").string());
  write_text_file((fs::path(cfg.out) / "config.resolved").string(),
                  dscnn::serialize_config(cfg));
  std::cout << "best epoch " << result.best_epoch << " valid "
            << result.best_valid << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval

dscnn::RunConfig config_from_checkpoint(const dscnn::Checkpoint& ckpt) {
  dscnn::RunConfig cfg;
  cfg.embeddings.clear();
  for (const auto& [key, value] : ckpt.config) {
    if (key == "classes" || key == "labels" ||
        key.find(".vocab") != std::string::npos) {
      continue;
    }
    dscnn::apply_config_entry(cfg, key, value);
  }
  return cfg;
}

void restore_trainable_vocab(const dscnn::Checkpoint& ckpt,
                             dscnn::ChannelSet& channels) {
  for (std::size_t ci = 0; ci < channels.count(); ++ci) {
    const std::string* extra =
        ckpt.find_config("emb" + std::to_string(ci) + ".vocab");
    if (!extra) continue;
    std::istringstream in(*extra);
    std::string tok;
    std::vector<std::string> toks;
    while (in >> tok) toks.push_back(tok);
    channels.tables[ci].materialize(toks);
  }
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& report_path) {
  const dscnn::Checkpoint ckpt = dscnn::load_checkpoint(checkpoint_path);
  if (ckpt.kind != "model") {
    throw dscnn::FormatError("checkpoint kind '" + ckpt.kind +
                             "' is not a model checkpoint");
  }
  dscnn::RunConfig cfg = config_from_checkpoint(ckpt);
  const std::string* classes_str = ckpt.find_config("classes");
  const std::string* labels_str = ckpt.find_config("labels");
  if (!classes_str || !labels_str) {
    throw dscnn::FormatError("checkpoint is missing classes/labels");
  }
  const int classes = std::stoi(*classes_str);
  std::vector<std::string> labels;
  {
    std::istringstream in(*labels_str);
    std::string tok;
    while (in >> tok) labels.push_back(tok);
  }

  const dscnn::Corpus corpus = load_corpus_checked(data_path);
  // remap corpus labels through the checkpoint's label table
  std::vector<int> remap(corpus.label_names.size(), -1);
  for (std::size_t i = 0; i < corpus.label_names.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (corpus.label_names[i] == labels[j]) {
        remap[i] = static_cast<int>(j);
      }
    }
    if (remap[i] < 0) {
      throw dscnn::DomainError("label '" + corpus.label_names[i] +
                               "' was not seen at training time");
    }
  }

  dscnn::ChannelSet channels = dscnn::build_channels(cfg);
  restore_trainable_vocab(ckpt, channels);

  dscnn::ModelInit init;
  init.filter_spec = dscnn::parse_filter_spec(cfg.filters);
  init.conv_nonlinearity = dscnn::nonlin_from_name(cfg.nonlinearity);
  init.h_dim = cfg.hdim;
  init.classes = classes;
  init.dropout_rate = cfg.dropout;
  init.forget_bias = cfg.forget_bias;
  init.conv_only = cfg.conv_only;
  init.seed = dscnn::derive_seed(cfg.seed, "init");

  json report;
  report["examples"] = json::array();
  std::size_t correct = 0;

  auto run_examples = [&](auto&& infer) {
    for (const dscnn::Example& ex : corpus.examples) {
      const dscnn::Matrix probs = infer(ex.tokens);
      std::size_t best = 0;
      for (std::size_t k = 1; k < probs.rows(); ++k)
        if (probs(k, 0) > probs(best, 0)) best = k;
      const int gold = remap[ex.label];
      if (static_cast<int>(best) == gold) ++correct;
      json row;
      row["id"] = ex.id;
      row["gold"] = labels[gold];
      row["predicted"] = labels[best];
      std::vector<double> p(probs.rows());
      for (std::size_t k = 0; k < probs.rows(); ++k) p[k] = probs(k, 0);
      row["probabilities"] = p;
      report["examples"].push_back(std::move(row));
    }
  };

  if (cfg.mode == "sentence") {
    dscnn::SentenceModel model =
        dscnn::make_sentence_model(std::move(channels), init);
    dscnn::load_params(ckpt, dscnn::named_params(model));
    run_examples([&model](const std::vector<std::string>& toks) {
      return dscnn::sentence_forward(model, toks);
    });
  } else {
    dscnn::DocumentModel model =
        dscnn::make_document_model(std::move(channels), init);
    dscnn::load_params(ckpt, dscnn::named_params(model));
    run_examples([&model](const std::vector<std::string>& toks) {
      return dscnn::document_forward(model, toks);
    });
  }

  const double accuracy =
      static_cast<double>(correct) / corpus.examples.size();
  report["accuracy"] = accuracy;

  char line[32];
  std::snprintf(line, sizeof(line), "%.4f", accuracy);
  std::cout << line << "\n";
  if (!report_path.empty()) {
    write_text_file(report_path, report.dump(2) + "\n");
  }
  return 0;
}

// ------------------------------------------------------------- gradcheck

int cmd_gradcheck(const CommonFlags& flags) {
  dscnn::RunConfig cfg;
  // tiny desk-scale defaults; flags can override
  cfg.embeddings = {"random:8", "random:8"};
  cfg.hdim = 8;
  cfg.filters = "2:3,3:3";
  cfg.dropout = 0.0;
  CommonFlags merged = flags;
  merged.config_path = flags.config_path;
  if (!flags.config_path.empty()) {
    cfg = dscnn::load_config_file(flags.config_path, cfg);
  }
  if (!flags.embeddings.empty()) cfg.embeddings = flags.embeddings;
  if (flags.hdim) cfg.hdim = *flags.hdim;
  if (flags.filters) cfg.filters = *flags.filters;
  if (flags.dropout) cfg.dropout = *flags.dropout;
  if (flags.seed) cfg.seed = static_cast<std::uint64_t>(*flags.seed);
  if (flags.forget_bias) cfg.forget_bias = *flags.forget_bias;
  dscnn::validate_config(cfg);

  dscnn::ModelInit init;
  init.filter_spec = dscnn::parse_filter_spec(cfg.filters);
  init.conv_nonlinearity = dscnn::nonlin_from_name(cfg.nonlinearity);
  init.h_dim = cfg.hdim;
  init.classes = 2;
  init.dropout_rate = cfg.dropout;
  init.forget_bias = cfg.forget_bias;
  init.seed = dscnn::derive_seed(cfg.seed, "init");

  const std::vector<std::string> sentence = {"the", "quick", "brown",
                                             "fox", "jumps", "high"};
  const std::vector<std::string> document = {"one", "two", "three", ",",
                                             "four", "five", "."};

  bool all_ok = true;
  auto print_report = [&all_ok](const std::string& tag,
                                const dscnn::GradcheckReport& report) {
    for (const dscnn::GradcheckGroup& g : report.groups) {
      const bool ok = g.max_rel_err < 1e-4;
      all_ok = all_ok && ok;
      std::printf("%s %-12s max_rel_err %.3e [%zu entries] %s\n", tag.c_str(),
                  g.name.c_str(), g.max_rel_err, g.entries,
                  ok ? "PASS" : "FAIL");
    }
  };

  {
    dscnn::SentenceModel model =
        dscnn::make_sentence_model(dscnn::build_channels(cfg), init);
    print_report("sentence",
                 dscnn::gradcheck_model(model, sentence, 1,
                                        dscnn::derive_seed(cfg.seed, "gcd")));
  }
  {
    dscnn::DocumentModel model =
        dscnn::make_document_model(dscnn::build_channels(cfg), init);
    print_report("document",
                 dscnn::gradcheck_model(model, document, 0,
                                        dscnn::derive_seed(cfg.seed, "gcd")));
  }
  std::printf("gradcheck %s\n", all_ok ? "PASS" : "FAIL");
  return all_ok ? 0 : 1;
}

// -------------------------------------------------------------- pretrain

int cmd_pretrain(const CommonFlags& flags) {
  dscnn::RunConfig cfg = resolve_config(flags);
  if (cfg.out.empty()) throw dscnn::DomainError("pretrain: --out is required");
  fs::create_directories(cfg.out);

  const dscnn::Corpus corpus = load_corpus_checked(cfg.data);
  dscnn::Split split = make_split(cfg, corpus);

  auto to_sentences = [&cfg](const std::vector<dscnn::Example>& examples) {
    std::vector<std::vector<std::string>> sents;
    for (const auto& ex : examples) {
      if (cfg.mode == "document") {
        for (auto& seg : dscnn::split_subsentences(ex.tokens))
          sents.push_back(seg);
      } else {
        sents.push_back(ex.tokens);
      }
    }
    return sents;
  };
  const auto train_sents = to_sentences(split.train);
  const auto valid_sents = to_sentences(split.valid);

  dscnn::ChannelSet channels = dscnn::build_channels(cfg);
  std::vector<dscnn::Autoencoder> encoders;
  for (std::size_t ci = 0; ci < channels.count(); ++ci) {
    dscnn::PretrainConfig pc;
    pc.h_dim = cfg.hdim;
    pc.rho = cfg.rho;
    pc.epsilon = cfg.epsilon;
    pc.patience = cfg.patience;
    pc.max_epochs = cfg.max_epochs;
    pc.batch_size = cfg.batch_size;
    pc.seed = dscnn::derive_seed(cfg.seed, "pretrain", ci);
    pc.metrics_path =
        (fs::path(cfg.out) / ("pretrain_metrics_ch" + std::to_string(ci) +
                              ".csv"))
            .string();
    pc.wall_timing = cfg.timing == "wall";
    encoders.push_back(dscnn::pretrain_run(channels.tables[ci], train_sents,
                                           valid_sents, pc));
  }

  auto config_entries = dscnn::config_kv(cfg);
  dscnn::save_checkpoint(
      dscnn::make_pretrain_checkpoint(encoders, config_entries),
      (fs::path(cfg.out) / "encoder.dscnn").string());
  write_text_file((fs::path(cfg.out) / "config.resolved").string(),
                  dscnn::serialize_config(cfg));
  return 0;
}

// ----------------------------------------------------------------- synth

int cmd_synth(int n, int seq_len, int vocab, int gap, long seed,
              const std::string& out_path) {
  const dscnn::Corpus corpus = dscnn::synth_longdep(
      n, seq_len, vocab, gap, static_cast<std::uint64_t>(seed));
  dscnn::write_tsv(corpus, out_path);
  std::cout << "wrote " << corpus.examples.size() << " examples to "
            << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM-convolution text classifier toolkit"};
  app.require_subcommand(1);

  CommonFlags train_flags, pretrain_flags, gradcheck_flags;

  CLI::App* train = app.add_subcommand("train", "train a classifier");
  add_common_flags(train, train_flags);

  std::string eval_checkpoint, eval_data, eval_report;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")
      ->required();
  eval->add_option("--data", eval_data, "dataset to score")->required();
  eval->add_option("--report", eval_report, "per-example JSON report path");

  CLI::App* pretrain = app.add_subcommand(
      "pretrain", "sequence-autoencoder pretraining of the LSTM encoders");
  add_common_flags(pretrain, pretrain_flags);

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "compare reverse-mode gradients with finite differences");
  add_common_flags(gradcheck, gradcheck_flags);

  int synth_n = 1000, synth_len = 20, synth_vocab = 10, synth_gap = 15;
  long synth_seed = 1;
  std::string synth_out;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a long-dependency dataset");
  synth->add_option("--n", synth_n, "number of examples");
  synth->add_option("--seq-len", synth_len, "tokens per example");
  synth->add_option("--vocab", synth_vocab, "vocabulary size");
  synth->add_option("--gap", synth_gap, "dependency distance");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output tsv path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_checkpoint, eval_data, eval_report);
    if (pretrain->parsed()) return cmd_pretrain(pretrain_flags);
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_flags);
    if (synth->parsed()) {
      return cmd_synth(synth_n, synth_len, synth_vocab, synth_gap, synth_seed,
                       synth_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

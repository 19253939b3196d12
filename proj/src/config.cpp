#include "dscnn/config.hpp"

#include <fstream>
#include <sstream>

#include "dscnn/convolution.hpp"
#include "dscnn/error.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw FormatError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw FormatError("config: '" + key + "' expects a number, got '" + v +
                      "'");
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw FormatError("config: '" + key + "' expects an integer, got '" + v +
                      "'");
  }
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "mode") {
    cfg.mode = value;
  } else if (key == "embeddings") {
    cfg.embeddings.push_back(value);
  } else if (key == "hdim") {
    cfg.hdim = static_cast<std::size_t>(parse_long(value, key));
  } else if (key == "filters") {
    cfg.filters = value;
  } else if (key == "nonlinearity") {
    cfg.nonlinearity = value;
  } else if (key == "dropout") {
    cfg.dropout = parse_double(value, key);
  } else if (key == "rho") {
    cfg.rho = parse_double(value, key);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(value, key);
  } else if (key == "patience") {
    cfg.patience = static_cast<int>(parse_long(value, key));
  } else if (key == "max_epochs") {
    cfg.max_epochs = static_cast<int>(parse_long(value, key));
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<int>(parse_long(value, key));
  } else if (key == "grad_clip") {
    cfg.grad_clip = parse_double(value, key);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
  } else if (key == "kfold") {
    cfg.kfold = value;
  } else if (key == "valid_fraction") {
    cfg.valid_fraction = parse_double(value, key);
  } else if (key == "trainable_embeddings") {
    cfg.trainable_embeddings = parse_bool(value, key);
  } else if (key == "forget_bias") {
    cfg.forget_bias = parse_double(value, key);
  } else if (key == "conv_only") {
    cfg.conv_only = parse_bool(value, key);
  } else if (key == "timing") {
    cfg.timing = value;
  } else if (key == "init_encoder") {
    cfg.init_encoder = value;
  } else if (key == "data") {
    cfg.data = value;
  } else if (key == "valid") {
    cfg.valid = value;
  } else if (key == "test") {
    cfg.test = value;
  } else if (key == "out") {
    cfg.out = value;
  } else {
    throw FormatError("config: unknown key '" + key + "'");
  }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  bool embeddings_reset = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    // a file's channel list replaces the base's rather than appending
    if (key == "embeddings" && !embeddings_reset) {
      base.embeddings.clear();
      embeddings_reset = true;
    }
    apply_config_entry(base, key, line.substr(eq + 1));
  }
  return base;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "mode=" << cfg.mode << '\n';
  for (const std::string& e : cfg.embeddings) out << "embeddings=" << e << '\n';
  out << "hdim=" << cfg.hdim << '\n';
  out << "filters=" << cfg.filters << '\n';
  out << "nonlinearity=" << cfg.nonlinearity << '\n';
  out << "dropout=" << cfg.dropout << '\n';
  out << "rho=" << cfg.rho << '\n';
  out << "epsilon=" << cfg.epsilon << '\n';
  out << "patience=" << cfg.patience << '\n';
  out << "max_epochs=" << cfg.max_epochs << '\n';
  out << "batch_size=" << cfg.batch_size << '\n';
  out << "grad_clip=" << cfg.grad_clip << '\n';
  out << "seed=" << cfg.seed << '\n';
  if (!cfg.kfold.empty()) out << "kfold=" << cfg.kfold << '\n';
  out << "valid_fraction=" << cfg.valid_fraction << '\n';
  out << "trainable_embeddings=" << (cfg.trainable_embeddings ? 1 : 0) << '\n';
  out << "forget_bias=" << cfg.forget_bias << '\n';
  out << "conv_only=" << (cfg.conv_only ? 1 : 0) << '\n';
  out << "timing=" << cfg.timing << '\n';
  if (!cfg.init_encoder.empty()) out << "init_encoder=" << cfg.init_encoder << '\n';
  if (!cfg.data.empty()) out << "data=" << cfg.data << '\n';
  if (!cfg.valid.empty()) out << "valid=" << cfg.valid << '\n';
  if (!cfg.test.empty()) out << "test=" << cfg.test << '\n';
  if (!cfg.out.empty()) out << "out=" << cfg.out << '\n';
  return out.str();
}

std::vector<std::pair<std::string, std::string>> config_kv(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

std::pair<int, int> parse_kfold(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw FormatError("kfold spec '" + spec + "' is not K:F");
  }
  const int k = static_cast<int>(parse_long(spec.substr(0, colon), "kfold"));
  const int f = static_cast<int>(parse_long(spec.substr(colon + 1), "kfold"));
  return {k, f};
}

ChannelSet build_channels(const RunConfig& cfg) {
  if (cfg.embeddings.empty()) {
    throw DomainError("config: at least one embeddings channel is required");
  }
  const std::uint64_t oov_seed = derive_seed(cfg.seed, "oov");
  ChannelSet channels;
  int index = 0;
  for (const std::string& spec : cfg.embeddings) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw FormatError("embeddings spec '" + spec +
                        "' must be glove:PATH, w2v:PATH or random:DIM");
    }
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (kind == "glove") {
      channels.tables.push_back(load_glove_text(rest, oov_seed, index));
    } else if (kind == "w2v") {
      channels.tables.push_back(load_word2vec_binary(rest, oov_seed, index));
    } else if (kind == "random") {
      const long dim = parse_long(rest, "embeddings");
      if (dim < 1) throw DomainError("random channel dimension must be >= 1");
      channels.tables.emplace_back(static_cast<std::size_t>(dim), oov_seed,
                                   index);
    } else {
      throw FormatError("embeddings spec '" + spec + "' has unknown kind '" +
                        kind + "'");
    }
    channels.tables.back().set_trainable(cfg.trainable_embeddings);
    ++index;
  }
  channels.dim();  // throws on disagreement
  return channels;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.mode != "sentence" && cfg.mode != "document") {
    throw DomainError("config: mode must be sentence or document");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw DomainError("config: dropout must be in [0, 1)");
  }
  if (cfg.patience < 1) throw DomainError("config: patience must be >= 1");
  if (cfg.max_epochs < 1) throw DomainError("config: max_epochs must be >= 1");
  if (cfg.batch_size < 1) throw DomainError("config: batch_size must be >= 1");
  if (cfg.timing != "wall" && cfg.timing != "none") {
    throw DomainError("config: timing must be wall or none");
  }
  if (cfg.nonlinearity != "relu" && cfg.nonlinearity != "tanh") {
    throw DomainError("config: nonlinearity must be relu or tanh");
  }
  parse_filter_spec(cfg.filters);
  if (!cfg.kfold.empty()) parse_kfold(cfg.kfold);
}

}  // namespace dscnn

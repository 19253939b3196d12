#include "dscnn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "dscnn/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace dscnn {

namespace {
constexpr const char* kMagic = "DSCNNCKPT 1";
}

const Matrix* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

const std::string* Checkpoint::find_config(const std::string& key) const {
  for (const auto& [k, v] : config) {
    if (k == key) return &v;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << kMagic << '\n';
  out << "kind=" << ckpt.kind << '\n';
  for (const auto& [k, v] : ckpt.config) {
    if (k.find('\n') != std::string::npos ||
        k.find('=') != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw DomainError("checkpoint config entry '" + k +
                        "' contains a separator");
    }
    out << k << '=' << v << '\n';
  }
  out << "%%\n";
  for (const auto& [name, m] : ckpt.tensors) {
    if (name.find_first_of(" \n") != std::string::npos || name.empty()) {
      throw DomainError("checkpoint tensor name '" + name + "' is invalid");
    }
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw FormatError(path + ": bad checkpoint magic");
  }
  Checkpoint ckpt;
  bool have_kind = false;
  while (std::getline(in, line)) {
    if (line == "%%") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ": malformed config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "kind" && !have_kind) {
      ckpt.kind = value;
      have_kind = true;
    } else {
      ckpt.config.emplace_back(key, value);
    }
  }
  if (!have_kind) throw FormatError(path + ": missing kind line");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(header >> name >> rows >> cols)) {
      throw FormatError(path + ": malformed tensor header '" + line + "'");
    }
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (in.gcount() !=
        static_cast<std::streamsize>(m.size() * sizeof(double))) {
      throw FormatError(path + ": tensor '" + name + "' expected " +
                        std::to_string(m.size() * sizeof(double)) +
                        " bytes, got " + std::to_string(in.gcount()));
    }
    ckpt.tensors.emplace_back(name, std::move(m));
  }
  return ckpt;
}

}  // namespace dscnn

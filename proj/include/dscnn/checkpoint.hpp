#pragma once

#include <string>
#include <vector>

#include "dscnn/matrix.hpp"

namespace dscnn {

/// Flat, ordered, named-tensor container with a key=value config block.
///
/// On disk:
///   "DSCNNCKPT 1\n"
///   kind=<model|pretrain>\n
///   <config lines, key=value>
///   %%\n
///   repeated tensor records: "<name> <rows> <cols>\n" followed by
///   rows*cols raw little-endian float64 values.
struct Checkpoint {
  std::string kind = "model";
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix* find_tensor(const std::string& name) const;
  const std::string* find_config(const std::string& key) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dscnn

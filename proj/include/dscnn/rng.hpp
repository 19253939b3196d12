#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dscnn {

/// 64-bit FNV-1a. Used to derive stable sub-seeds from names; std::hash is
/// implementation-defined and would break cross-build determinism.
std::uint64_t fnv1a(std::string_view s);

/// Mixes a base seed with a tag and up to two counters into a new seed.
/// All randomness in the toolkit flows from one config seed through this.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

/// mt19937_64 wrapped with hand-rolled samplers. std::*_distribution is
/// implementation-defined, so sampling is done from raw bits to keep
/// outputs bitwise reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian();

  /// Uniform integer in [0, n) without modulo bias.
  std::size_t index(std::size_t n);

  /// Fisher-Yates shuffle (std::shuffle is implementation-defined).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace dscnn

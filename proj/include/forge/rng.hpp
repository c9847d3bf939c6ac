#pragma once

// Deterministic RNG helpers. std::mt19937_64 output is fully specified by the
// standard, but std::uniform_int_distribution is not, so bounded draws are
// implemented here with plain rejection sampling to keep sampled corpora
// byte-identical across compilers.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include "forge/sha256.hpp"

namespace forge {

class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Unbiased draw from [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
    uint64_t threshold = (-n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit stream seed derived from a base seed plus a label, so each
// pipeline round gets an independent, reproducible stream.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
  std::string key = std::to_string(base);
  key.push_back('/');
  key.append(label);
  std::string hex = sha256_hex(key);
  uint64_t v = 0;
  for (int i = 0; i < 16; ++i) {
    char c = hex[static_cast<size_t>(i)];
    v = (v << 4) | static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  return v;
}

}  // namespace forge

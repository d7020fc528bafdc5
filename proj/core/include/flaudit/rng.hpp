#pragma once

#include <cstdint>
#include <vector>

#include "flaudit/errors.hpp"

// Deterministic randomness. std::uniform_*_distribution is implementation
// defined, so sampling is done by hand to keep runs bit-identical across
// standard libraries.

namespace flaudit {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Stable seed for a derived stream keyed by (seed, tag).
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
  uint64_t s = seed ^ (0xd1342543de82ef95ull * (tag + 1));
  return splitmix64(s);
}

/// xoshiro256** seeded via splitmix64; cheap to fork into derived streams.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  /// Independent stream keyed by (this stream's seed, tag).
  Rng derive(uint64_t tag) const {
    uint64_t s = state_[0] ^ (0x9e3779b97f4a7c15ull * (tag + 1));
    return Rng(s);
  }

  uint64_t next() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    uint64_t result = rotl(state_[1] * 5, 7) * 9;
    uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, n), rejection sampled.
  uint64_t below(uint64_t n) {
    require(n > 0, ErrorCode::domain_error, "below(0)");
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform double in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// k distinct values from [0, n). Order is the draw order, not sorted.
  std::vector<uint64_t> sample_distinct(uint64_t k, uint64_t n) {
    require(k <= n, ErrorCode::domain_error, "sample_distinct: k > n");
    std::vector<uint64_t> out;
    out.reserve(k);
    if (k * 4 <= n) {
      // sparse case: rejection against the few already drawn
      while (out.size() < k) {
        uint64_t v = below(n);
        bool seen = false;
        for (uint64_t u : out) seen |= (u == v);
        if (!seen) out.push_back(v);
      }
      return out;
    }
    std::vector<uint64_t> pool(n);
    for (uint64_t i = 0; i < n; i++) pool[i] = i;
    for (uint64_t i = 0; i < k; i++) {
      uint64_t j = i + below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  uint64_t state_[4];
};

}  // namespace flaudit

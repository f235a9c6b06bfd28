#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace molt {

// Counter-style splitmix64 generator. Self-contained so that streams are
// bit-identical across platforms and standard library versions; std::
// distributions are implementation-defined and unusable for that.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent substream for (seed, tag, counter). Used for per-epoch
  // shuffles, per-sample noise, per-parameter init.
  static Rng stream(uint64_t seed, uint64_t tag, uint64_t counter = 0) {
    uint64_t s = seed;
    s = mix(s ^ (tag * 0x9e3779b97f4a7c15ull));
    s = mix(s ^ (counter * 0xbf58476d1ce4e5b9ull));
    return Rng(s);
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (two uniforms per draw, no caching).
  double next_gaussian() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

// FNV-1a over bytes; used for config hashing and stream tags.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a_str(const char* s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (; *s; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace molt

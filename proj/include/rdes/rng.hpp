#pragma once

#include <cstdint>
#include <random>

namespace rdes {

// splitmix64 step; used for seed derivation so that sub-streams of one run
// seed are decorrelated. The constants are the reference ones.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for stream `stream` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x51ed270b0f4d2d9cULL));
}

// Seeded generator with portable sampling helpers. std::mt19937_64 is fully
// specified by the standard; the distribution helpers below avoid
// <random>'s implementation-defined distributions so that draws are
// bit-reproducible across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n); n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  int next_index(int n) { return static_cast<int>(next_below(static_cast<std::uint64_t>(n))); }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a over arbitrary bytes; the fixed hash used for state keys and
// checkpoint checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rdes

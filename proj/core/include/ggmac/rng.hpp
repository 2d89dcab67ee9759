#pragma once

#include <cstdint>
#include <random>

namespace ggmac {

// SplitMix64 finalizer, used to whiten seed material before it reaches an engine.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministically derives a child seed from a parent seed and one or more
// stream tags. Children with distinct tag tuples are statistically independent,
// so every trial/block/noise stream gets its own seed and results do not depend
// on evaluation order or thread count.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, Tags... rest) {
  return derive_seed(derive_seed(parent, tag), rest...);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace ggmac

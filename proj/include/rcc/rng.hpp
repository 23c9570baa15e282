#pragma once

#include <cstdint>

namespace rcc {

// Counter-free SplitMix64 generator (Steele, Lea, Flood 2014). Chosen as the
// project-wide named generator: the whole state is one 64-bit word, streams
// are cheap to derive, and the update is documented well enough that another
// implementation can reproduce the exact sequence from a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps the draw exact.
  int uniform_int(int n) {
    const std::uint64_t bound = ~0ull - ~0ull % static_cast<std::uint64_t>(n);
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= bound);
    return static_cast<int>(u % static_cast<std::uint64_t>(n));
  }

  // Independent substream for (seed, index); used by sweep drivers so grid
  // points never share generator state.
  static std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0xbf58476d1ce4e5b9ull * (index + 1)));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace rcc

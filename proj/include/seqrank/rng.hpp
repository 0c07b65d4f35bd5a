#pragma once

#include <cmath>
#include <cstdint>

namespace seqrank {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Counter-based generator: the full state is (seed, counter), so snapshots of
// anything driven by it are two integers. Output n is the SplitMix64 stream
// element at position n for the given seed.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() {
    counter_ += 1;
    return mix64(seed_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform on the open interval (0,1); both endpoints are excluded.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two counter increments, no cached state.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

// Independent stream for substream `index` (replications, parallel paths).
// The scrambling keeps child streams off the parent's counter orbit.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(0x9e3779b97f4a7c15ULL + index));
}

}  // namespace seqrank

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace qacgen {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed derivation: mix64(a, b) = splitmix64(a ^ splitmix64(b)), folded
// left-to-right for more arguments. Used for per-sample and per-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

// Counter-based stream: the i-th output (0-based) is
//   splitmix64(seed + i * 0x9E3779B97F4A7C15)
// which is exactly the SplitMix64 sequence. Doubles take the top 53 bits.
// The full definition fits in three lines so ports in other languages can
// reproduce every draw bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t x = seed_ + counter_ * 0x9E3779B97F4A7C15ULL;
    ++counter_;
    return splitmix64(x);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be >= 1. floor(uniform() * n).
  std::size_t below(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace qacgen

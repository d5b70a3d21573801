#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace switchrd {

// splitmix64 mixer; used to derive decorrelated per-stream seeds from
// (master seed, stream index).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + 0x9e3779b97f4a7c15ull * (index + 1));
}

// mt19937_64 (algorithm fixed by the C++ standard, so streams are
// bit-identical across platforms) with explicit inverse-CDF mappings; the
// std distributions are not portable and are deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on (0, 1]; never returns 0 so that log(u) is always finite.
  double uniform01() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
  }

  // Exponential with the given rate via inverse CDF.
  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace switchrd

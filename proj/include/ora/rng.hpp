#pragma once

#include <cassert>
#include <cstdint>
#include <random>
#include <vector>

namespace ora {

/// SplitMix64 mixing step (Steele, Lea & Flood 2014). Used to derive
/// substream keys from (seed, frame, object) triples.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream with draws that are reproducible across
/// platforms and standard libraries.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the
/// C++ standard. std::uniform_*_distribution is deliberately avoided: its
/// output is implementation-defined. uniform_double() consumes exactly one
/// engine draw per call, so draw counts (and therefore whole traces) are
/// stable across toolchains.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Substream for one object of one frame. Key derivation:
  ///   k = splitmix64(splitmix64(splitmix64(seed) ^ frame_id) ^ object_index)
  static SeededRng substream(std::uint64_t seed, std::uint64_t frame_id,
                             std::uint64_t object_index) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ frame_id);
    k = splitmix64(k ^ object_index);
    return SeededRng(k);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1): top 53 bits of one engine draw.
  double uniform_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi); returns lo exactly when lo == hi.
  double uniform_double(double lo, double hi) {
    return lo + (hi - lo) * uniform_double();
  }

  /// Uniform integer in [0, n); bias-free masked rejection sampling.
  std::uint64_t uniform_index(std::uint64_t n) {
    assert(n > 0);
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    std::uint64_t x;
    do {
      x = next_u64() & mask;
    } while (x >= n);
    return x;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ora

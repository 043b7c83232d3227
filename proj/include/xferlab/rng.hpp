#pragma once

// Seedable, splittable random streams. Every sample index gets its own
// stream derived from (seed, index), so chunked parallel sampling reproduces
// serial output bit for bit.

#include <cstdint>
#include <limits>

namespace xferlab {

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    return mix(z);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for sample `index` under experiment seed `seed`.
inline SplitMix64 make_stream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(SplitMix64::mix(seed ^ SplitMix64::mix(index + 0x632BE59BD9B4E019ULL)));
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace xferlab

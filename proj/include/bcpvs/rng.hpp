#ifndef BCPVS_RNG_HPP
#define BCPVS_RNG_HPP

#include <cstdint>
#include <limits>

namespace bcpvs {

/// Counter-based generator: the i-th output is a bijective mix of
/// key + i * golden_gamma (the SplitMix64 finalizer). Streams are derived by
/// hashing (seed, stream) into a fresh key, so chain k of a run never depends
/// on how many draws another chain made.
///
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(derive_key(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (counter_++) * kGamma); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Independent child stream.
  CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream + 1); }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed ^ 0x6A09E667F3BCC909ULL) + stream * kGamma);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bcpvs

#endif  // BCPVS_RNG_HPP

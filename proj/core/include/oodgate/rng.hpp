#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace oodgate {

/// Named purposes for random draws. Each purpose gets its own engine so that
/// changing how many numbers one stage consumes never perturbs another stage.
enum class Stream : std::uint64_t {
  kClassMeans = 1,
  kIdSamples = 2,
  kLabelNoise = 3,
  kOodDirection = 4,
  kOodSamples = 5,
  kSplit = 6,
  kSubsample = 7,
  kClassSizes = 8,
  kImbalance = 9,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for (seed, stream, index); index distinguishes e.g. per-class streams.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::uint64_t index = 0) noexcept;

/// Portable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified, and
/// generated worlds must be bit-identical across standard libraries:
///   uniform01: top 53 bits of one engine draw, scaled by 2^-53, in [0, 1).
///   normal: Box-Muller on (1 - uniform01, uniform01), both outputs used.
///   uniform_index(n): rejection on the top bits, no modulo bias.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double normal();
  std::size_t uniform_index(std::size_t n);

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace oodgate

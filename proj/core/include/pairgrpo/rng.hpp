#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace pairgrpo {

/// Philox4x32-10 block function (Salmon et al.). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// What a random stream is used for. Combined with a worker / sample index
/// to form the Philox stream id, so independent consumers never overlap.
enum class StreamPurpose : std::uint16_t {
  kUtilities = 1,
  kTrainBatch = 2,
  kEquivalence = 3,
  kVarianceSample = 4,
  kGeneric = 5,
};

std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t index);

/// Counter-based generator: (seed, stream) fixes the sequence, the block
/// counter advances it. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;
  Rng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index) noexcept
      : Rng(seed, make_stream_id(purpose, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal draw.
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pairgrpo

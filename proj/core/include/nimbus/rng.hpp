#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nimbus {

/// Deterministic random source used by every stochastic operation in the
/// library. The transforms on top of the mt19937_64 stream are spelled out
/// here instead of delegating to std:: distributions, so that a seed and a
/// call sequence fully determine every draw and test oracles can replay the
/// exact stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw from [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform draw from the open interval (lo, hi), endpoints excluded.
  double uniform_open(double lo, double hi);

  /// Standard normal deviate via the Box-Muller transform. Stateless between
  /// calls (the paired deviate is discarded).
  double normal();

  /// Unbiased uniform integer in [0, n). Requires n >= 1.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Stable mix of a base seed with a stream index, used to derive independent
/// generators per epoch, layer or component from one user-facing seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Fisher-Yates shuffle of {0..n-1} driven by the given generator.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

// Stream tags for mix_seed. Same base seed, disjoint purposes.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamSample = 2;
inline constexpr std::uint64_t kStreamSplit = 3;
inline constexpr std::uint64_t kStreamShuffle = 4;
inline constexpr std::uint64_t kStreamLayer = 5;

/// Minibatch index schedule for one epoch: {0..count-1} reshuffled by
/// (seed, epoch), chunked into batches of batch_size with the final partial
/// batch kept. epoch is 1-based.
std::vector<std::vector<std::size_t>> minibatch_indices(std::size_t count,
                                                        std::size_t batch_size,
                                                        std::uint64_t seed, int epoch);

}  // namespace nimbus

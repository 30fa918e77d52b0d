#pragma once

#include <array>
#include <cstdint>

namespace mvfj {

/// Streams separate independent uses of one seed.
enum class RngStream : std::uint32_t {
  brownian = 1,
  graph_edges = 2,
  graph_stubborn = 3,
  initial_opinions = 4,
  gateaux_window = 5,
};

/// Philox4x32-10 block: a pure function of (key, counter). Used so every
/// random draw is addressable by (seed, agent, step) and independent of the
/// order or thread in which it is requested.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator keyed by a 64-bit seed.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  /// Four raw words for counter (stream, a, b).
  std::array<std::uint32_t, 4> block(RngStream stream, std::uint64_t a,
                                     std::uint64_t b) const;

  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double uniform(RngStream stream, std::uint64_t a, std::uint64_t b) const;

  /// Standard normal via Box-Muller on one block.
  double normal(RngStream stream, std::uint64_t a, std::uint64_t b) const;

  /// Uniform integer in [0, bound), bound >= 1. Unbiased up to 2^-64.
  std::uint64_t below(RngStream stream, std::uint64_t a, std::uint64_t b,
                      std::uint64_t bound) const;

  std::uint64_t seed() const noexcept { return seed_; }

private:
  std::uint64_t seed_;
};

} // namespace mvfj

#include "mvfj/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvfj {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi,
                    std::uint32_t &lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits to (0, 1): the +0.5 offset keeps both endpoints out.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> CounterRng::block(RngStream stream,
                                               std::uint64_t a,
                                               std::uint64_t b) const {
  // a is folded into one word with the stream tag; agent/edge indices never
  // approach 2^24 in practice, but the xor keeps larger values well-defined.
  const auto tag = static_cast<std::uint32_t>(stream);
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
      static_cast<std::uint32_t>(b >> 32),
      (tag << 24) ^ static_cast<std::uint32_t>(a >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

double CounterRng::uniform(RngStream stream, std::uint64_t a,
                           std::uint64_t b) const {
  const auto w = block(stream, a, b);
  return to_open_unit(w[0], w[1]);
}

double CounterRng::normal(RngStream stream, std::uint64_t a,
                          std::uint64_t b) const {
  const auto w = block(stream, a, b);
  const double u1 = to_open_unit(w[0], w[1]);
  const double u2 = to_open_unit(w[2], w[3]);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(RngStream stream, std::uint64_t a,
                                std::uint64_t b, std::uint64_t bound) const {
  const auto w = block(stream, a, b);
  const std::uint64_t r = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  // Lemire multiply-shift reduction.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(r) * bound) >> 64);
}

} // namespace mvfj

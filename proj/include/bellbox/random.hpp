#pragma once
// Counter-based random numbers: Philox4x32-10 (Salmon et al., SC'11).
//
// Every draw is a pure function of (seed, trial_index, draw_index):
//   key     = { seed & 0xffffffff, seed >> 32 }
//   counter = { trial & 0xffffffff, trial >> 32, draw_index, 0 }
//   block   = philox4x32_10(counter, key)
//   bits64  = (block[0] << 32) | block[1]
//   uniform = bits64 >> 11            (an integer k in [0, 2^53))
// No generator state is shared, so trials can run in any order.

#include <array>
#include <cstdint>

namespace bellbox {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

inline constexpr std::uint64_t kUniformSpan = std::uint64_t{1} << 53;

/// Draw indices used by the sampler.
enum class Draw : std::uint32_t { Context = 0, Cause = 1, AliceOutcome = 2, BobOutcome = 3 };

/// Integer uniform in [0, 2^53) keyed by (seed, trial, draw).
inline std::uint64_t keyed_uniform53(std::uint64_t seed, std::uint64_t trial,
                                     std::uint32_t draw) {
  const PhiloxBlock out = philox4x32_10(
      {static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), draw, 0u},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
  return bits >> 11;
}

inline std::uint64_t keyed_uniform53(std::uint64_t seed, std::uint64_t trial, Draw draw) {
  return keyed_uniform53(seed, trial, static_cast<std::uint32_t>(draw));
}

} // namespace bellbox

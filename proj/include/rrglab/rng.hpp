#pragma once

#include <cstdint>
#include <random>

namespace rrg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective avalanche mix of 64 bits.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` of `base`. Independent of evaluation order,
/// so parallel schedules reproduce serial results.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// Stream tags used with derive_seed for the sub-streams of one sample.
namespace stream {
inline constexpr std::uint64_t graph = 1;
inline constexpr std::uint64_t sign = 2;
inline constexpr std::uint64_t solver = 3;
inline constexpr std::uint64_t goe = 4;
inline constexpr std::uint64_t direction = 5;
inline constexpr std::uint64_t bootstrap = 6;
inline constexpr std::uint64_t inject = 7;
}  // namespace stream

}  // namespace rrg

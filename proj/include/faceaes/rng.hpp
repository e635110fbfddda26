#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace faceaes {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: the same (master, counters...) tuple always
/// yields the same seed, independent of the order in which streams are made.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t s = mix64(master);
  for (auto c : counters) s = mix64(s ^ mix64(c + 0x632BE59BD9B4E019ULL));
  return s;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> counters) {
  return Rng(derive_seed(master, counters));
}

}  // namespace faceaes

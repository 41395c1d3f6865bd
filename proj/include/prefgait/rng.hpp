#pragma once

#include <cstdint>
#include <random>

namespace prefgait {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// session seed so that every stochastic step can be replayed in isolation.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(base) ^ stream) ^ index);
}

// Stream tags for derive_seed.
namespace streams {
inline constexpr std::uint64_t kBatch = 0x6261746368ULL;
inline constexpr std::uint64_t kPrior = 0x7072696f72ULL;
inline constexpr std::uint64_t kChain = 0x636861696eULL;
inline constexpr std::uint64_t kQuery = 0x7175657279ULL;
inline constexpr std::uint64_t kValidation = 0x76616c6964ULL;
inline constexpr std::uint64_t kOracle = 0x6f7261636cULL;
}  // namespace streams

}  // namespace prefgait

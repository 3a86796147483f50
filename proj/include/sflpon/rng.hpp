#pragma once

#include <cstdint>
#include <random>

namespace sflpon {

using Rng = std::mt19937_64;

// Named purposes for independent random streams. Values are part of the
// replay contract: changing them changes every experiment's output.
enum class StreamPurpose : std::uint64_t {
  Partition = 1,
  Selection = 2,
  Wireless = 3,
  Batching = 4,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seed for the stream identified by (root, round, purpose, client). Each
/// field is folded through splitmix64 so neighbouring tuples decorrelate.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t round, StreamPurpose purpose,
                                    std::uint64_t client = 0) {
  std::uint64_t h = detail::splitmix64(root);
  h = detail::splitmix64(h ^ round);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = detail::splitmix64(h ^ client);
  return h;
}

inline Rng make_stream(std::uint64_t root, std::uint64_t round, StreamPurpose purpose, std::uint64_t client = 0) {
  return Rng(derive_seed(root, round, purpose, client));
}

}  // namespace sflpon

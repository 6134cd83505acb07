#pragma once

#include <cstdint>
#include <random>

namespace ecmki {

// Purpose tags for deriving independent random streams from one master
// seed. Every consumer derives its own stream from (master, tag, index,
// index), so results do not depend on execution order or thread count.
enum class RngStream : std::uint64_t {
  prior_mean = 1,
  prior_draw,
  member_noise,
  quarantine,
  profile,
  data_noise,
};

namespace detail {

// splitmix64 finalizer; good avalanche, stateless.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, RngStream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = detail::mix64(master);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(stream));
  h = detail::mix64(h ^ a);
  h = detail::mix64(h ^ b);
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace ecmki

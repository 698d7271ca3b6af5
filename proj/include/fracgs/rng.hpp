#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw is
// a pure function of (key, counter), so paths, processes, modes and steps can
// be generated in any order on any worker.

#include <array>
#include <cstdint>
#include <utility>

namespace fracgs::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter counter, Key key);

/// Key derived from a 64-bit seed.
inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Two independent standard normals from one Philox block (Box-Muller on two
/// 53-bit uniforms in (0, 1)).
std::pair<double, double> normal_pair(Counter counter, Key key);

}  // namespace fracgs::rng

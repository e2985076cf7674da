#pragma once

#include <cstdint>
#include <utility>

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, a, b, lane). The generator
// is part of the fixture contract:
//
//   h = mix(seed + G)
//   h = mix(h ^ (stream + G)); h = mix(h ^ (a + G)); h = mix(h ^ (b + G));
//   h = mix(h ^ (lane + G))
//
// with G = 0x9E3779B97F4A7C15 and mix the SplitMix64 finalizer. A uniform in
// (0, 1) is ((h >> 12) + 0.5) * 2^-52. Normals use Box-Muller on lanes 0 and 1:
// r = sqrt(-2 ln u0), z0 = r cos(2 pi u1), z1 = r sin(2 pi u1).
namespace ethlab::rng {

enum class Stream : std::uint64_t {
  spectrum = 1,
  off_diagonal = 2,
  diagonal = 3,
  code_selection = 4,
  state = 5,
  test = 99,
};

std::uint64_t mix(std::uint64_t x) noexcept;

std::uint64_t bits(std::uint64_t seed, Stream stream, std::uint64_t a,
                   std::uint64_t b, std::uint64_t lane) noexcept;

double uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
               std::uint64_t b = 0, std::uint64_t lane = 0) noexcept;

/// Two independent standard normals keyed on (seed, stream, a, b).
std::pair<double, double> normal_pair(std::uint64_t seed, Stream stream,
                                      std::uint64_t a,
                                      std::uint64_t b = 0) noexcept;

}  // namespace ethlab::rng

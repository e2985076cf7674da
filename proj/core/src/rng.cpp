#include "ethlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace ethlab::rng {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t bits(std::uint64_t seed, Stream stream, std::uint64_t a,
                   std::uint64_t b, std::uint64_t lane) noexcept {
  std::uint64_t h = mix(seed + kGolden);
  h = mix(h ^ (static_cast<std::uint64_t>(stream) + kGolden));
  h = mix(h ^ (a + kGolden));
  h = mix(h ^ (b + kGolden));
  return mix(h ^ (lane + kGolden));
}

double uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
               std::uint64_t b, std::uint64_t lane) noexcept {
  const std::uint64_t h = bits(seed, stream, a, b, lane);
  return (static_cast<double>(h >> 12) + 0.5) * 0x1.0p-52;
}

std::pair<double, double> normal_pair(std::uint64_t seed, Stream stream,
                                      std::uint64_t a,
                                      std::uint64_t b) noexcept {
  const double u0 = uniform(seed, stream, a, b, 0);
  const double u1 = uniform(seed, stream, a, b, 1);
  const double r = std::sqrt(-2.0 * std::log(u0));
  const double phi = 2.0 * std::numbers::pi * u1;
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace ethlab::rng

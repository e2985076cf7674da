#include <cmath>
#include <cstdint>
#include <set>

#include <doctest.h>

#include "ethlab/rng.hpp"

using namespace ethlab;

TEST_SUITE("rng") {

TEST_CASE("mix is the SplitMix64 finalizer") {
  // First output of a SplitMix64 generator seeded with 0.
  CHECK(rng::mix(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);
  CHECK(rng::mix(0) == 0);
}

TEST_CASE("bits follows the documented chain") {
  constexpr std::uint64_t g = 0x9E3779B97F4A7C15ULL;
  const std::uint64_t seed = 42, a = 7, b = 3, lane = 1;
  std::uint64_t h = rng::mix(seed + g);
  h = rng::mix(h ^ (2 + g));
  h = rng::mix(h ^ (a + g));
  h = rng::mix(h ^ (b + g));
  h = rng::mix(h ^ (lane + g));
  CHECK(rng::bits(seed, rng::Stream::off_diagonal, a, b, lane) == h);
}

TEST_CASE("draws are pure functions of their key") {
  const double u = rng::uniform(5, rng::Stream::test, 11, 12, 0);
  CHECK(u == rng::uniform(5, rng::Stream::test, 11, 12, 0));
  CHECK(u != rng::uniform(6, rng::Stream::test, 11, 12, 0));
  CHECK(u != rng::uniform(5, rng::Stream::state, 11, 12, 0));
  CHECK(u != rng::uniform(5, rng::Stream::test, 12, 11, 0));
  CHECK(u != rng::uniform(5, rng::Stream::test, 11, 12, 1));
}

TEST_CASE("uniform lies strictly inside (0, 1)") {
  const double lo = (0.0 + 0.5) * 0x1.0p-52;
  const double hi = (static_cast<double>((~std::uint64_t{0}) >> 12) + 0.5) * 0x1.0p-52;
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  std::set<double> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = rng::uniform(1, rng::Stream::test, i);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    seen.insert(u);
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("normal pairs have unit moments") {
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    const auto [z0, z1] = rng::normal_pair(9, rng::Stream::test, static_cast<std::uint64_t>(i));
    s1 += z0 + z1;
    s2 += z0 * z0 + z1 * z1;
    s4 += z0 * z0 * z0 * z0 + z1 * z1 * z1 * z1;
    cross += z0 * z1;
  }
  const double m = 2.0 * n;
  CHECK(std::abs(s1 / m) < 0.01);
  CHECK(std::abs(s2 / m - 1.0) < 0.01);
  CHECK(std::abs(s4 / m - 3.0) < 0.05);
  CHECK(std::abs(cross / n) < 0.01);
}

}

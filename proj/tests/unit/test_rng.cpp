#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "levyhjm/rng.hpp"

using namespace levyhjm;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a({42, 7}, Substream::Brownian);
  CounterRng b({42, 7}, Substream::Brownian);
  CounterRng c({42, 8}, Substream::Brownian);
  CounterRng d({42, 7}, Substream::JumpTimes);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    CHECK(x == b());
    firsts.insert(x);
  }
  CHECK(a() != c());
  CHECK(b() != d());
  CHECK(firsts.size() == 100);
}

TEST_CASE("uniform moments") {
  CounterRng rng({1, 0}, Substream::Aux);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / n;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3.0) < 5e-3);
}

TEST_CASE("normal and exponential moments") {
  CounterRng rng({3, 1}, Substream::Aux);
  const int n = 200000;
  double sn = 0.0, sn2 = 0.0, se = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential();
  }
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(se / n - 1.0) < 4.0 / std::sqrt(double(n)));
}

#include <doctest.h>

#include <cmath>

#include "plsim/rng.hpp"

using plsim::philox4x64;

// Reference blocks from numpy.random.Philox, which advances the counter once
// before its first block.
TEST_CASE("philox4x64 matches reference blocks") {
  const auto zero = philox4x64({1, 0, 0, 0}, {0, 0});
  CHECK(zero[0] == 0x02f4ba6408e4d89bULL);
  CHECK(zero[1] == 0x3dd62b0b9ca8c5b2ULL);
  CHECK(zero[2] == 0x1c8667a55d902e79ULL);
  CHECK(zero[3] == 0x907d7a052fd5b4dcULL);
  const auto next = philox4x64({2, 0, 0, 0}, {0, 0});
  CHECK(next[0] == 0x809bf322883987c3ULL);

  const auto keyed = philox4x64({6, 0, 0, 0}, {0x0123456789abcdefULL, 0xfedcba9876543210ULL});
  CHECK(keyed[0] == 0xd0bba8f1bcf6f692ULL);
  CHECK(keyed[1] == 0xe3473c643c54e623ULL);
  CHECK(keyed[2] == 0xeded168e9338e0d9ULL);
  CHECK(keyed[3] == 0xc20bc8d6143b0f29ULL);
}

TEST_CASE("streams are reproducible and distinct") {
  plsim::RandomStream a(7, 3), b(7, 3), c(7, 4);
  for (int k = 0; k < 10; ++k) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
}

TEST_CASE("uniform and normal moments") {
  plsim::RandomStream rng(11, 0);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - (su / n) * (su / n) - 1.0 / 12) < 0.002);
  CHECK(std::abs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
}

#include <catch2/catch_amalgamated.hpp>

#include "pwsim/bits.hpp"
#include "pwsim/rng.hpp"

using namespace pwsim;

TEST_CASE("streams are reproducible and worker-independent", "[rng]") {
  Rng a = Rng::stream(42, 7);
  Rng b = Rng::stream(42, 7);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  // distinct streams differ
  Rng c = Rng::stream(42, 8);
  REQUIRE(Rng::stream(42, 7).next_u64() != c.next_u64());
}

TEST_CASE("uniform lands in [0,1) and is roughly uniform", "[rng]") {
  Rng rng(123);
  double sum = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE(std::abs(sum / N - 0.5) < 0.01);
}

TEST_CASE("normal has unit moments", "[rng]") {
  Rng rng(99);
  const int N = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / N;
  const double var = s2 / N - mean * mean;
  REQUIRE(std::abs(mean) < 0.02);
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("bit packing round-trips and is little-endian", "[rng]") {
  Bits b = bits_from_string("10110001101");
  REQUIRE(bits_to_string(b) == "10110001101");
  auto packed = bits_pack(b);
  REQUIRE(packed.size() == 2);
  // qubit 0 -> bit 0 of byte 0
  REQUIRE((packed[0] & 1) == 1);
  REQUIRE(((packed[0] >> 1) & 1) == 0);
  REQUIRE(bits_unpack(packed, b.size()) == b);
}

TEST_CASE("index conversion uses qubit 0 as most significant", "[rng]") {
  REQUIRE(bits_to_index(bits_from_string("100")) == 4);
  REQUIRE(bits_to_index(bits_from_string("011")) == 3);
  REQUIRE(bits_to_string(bits_from_index(5, 3)) == "101");
}

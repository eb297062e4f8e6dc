#include "samtrack/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

namespace samtrack {
namespace {

TEST(SplitMix64, MatchesReferenceSequenceSeed0) {
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(g.next(), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(g.next(), 0x06C45D188009454Full);
  EXPECT_EQ(g.next(), 0xF88BB8A8724C81ECull);
}

TEST(SplitMix64, MatchesReferenceSequenceOtherSeeds) {
  SplitMix64 a(1);
  EXPECT_EQ(a.next(), 0x910A2DEC89025CC1ull);
  EXPECT_EQ(a.next(), 0xBEEB8DA1658EEC67ull);
  SplitMix64 b(0x123456789ABCDEFull);
  EXPECT_EQ(b.next(), 0x157A3807A48FAA9Dull);
  EXPECT_EQ(b.next(), 0xD573529B34A1D093ull);
}

TEST(SplitMix64, UniformUsesTop53Bits) {
  SplitMix64 g(0);
  EXPECT_EQ(g.uniform(), 0.88331080821364261);
}

TEST(SplitMix64, UniformStaysInHalfOpenUnitInterval) {
  SplitMix64 g(7);
  for (int i = 0; i < 20000; ++i) {
    const double u = g.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SplitMix64, UniformRangeRespectsBounds) {
  SplitMix64 g(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = g.uniform(-2.5, 3.5);
    EXPECT_GE(u, -2.5);
    EXPECT_LT(u, 3.5);
  }
}

TEST(SplitMix64, NormalMomentsAreSane) {
  SplitMix64 g(123);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(SplitMix64, NormalSequenceIsDeterministic) {
  SplitMix64 a(99), b(99);
  for (int i = 0; i < 1001; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(DeriveStream, DistinctAcrossSaltsAndStable) {
  const std::uint64_t seed = 42;
  for (std::uint64_t s1 = 0; s1 < 8; ++s1) {
    EXPECT_EQ(derive_stream(seed, s1), derive_stream(seed, s1));
    for (std::uint64_t s2 = s1 + 1; s2 < 8; ++s2)
      EXPECT_NE(derive_stream(seed, s1), derive_stream(seed, s2));
  }
  EXPECT_NE(derive_stream(1, 0), derive_stream(2, 0));
}

}  // namespace
}  // namespace samtrack

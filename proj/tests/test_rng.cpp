#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "atlas/rng.hpp"

using namespace atlas;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  const auto r = Philox4x32(0)({0, 0, 0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto r = Philox4x32(0xffffffffffffffffull)(
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(r[0], 0x408f276du);
  EXPECT_EQ(r[1], 0x41c83b0eu);
  EXPECT_EQ(r[2], 0xa20bc7c6u);
  EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const std::uint64_t key = std::uint64_t{0x299f31d0u} << 32 | 0xa4093822u;
  const auto r = Philox4x32(key)({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  EXPECT_EQ(r[0], 0xd16cfe09u);
  EXPECT_EQ(r[1], 0x94fdccebu);
  EXPECT_EQ(r[2], 0x5001e420u);
  EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(InverseNormal, MatchesErfc) {
  for (double p : {1e-300, 1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999999}) {
    const double x = inverse_normal_cdf(p);
    const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
    EXPECT_NEAR(back / p, 1.0, 1e-13) << "p=" << p;
  }
  EXPECT_EQ(inverse_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-14);
}

TEST(InverseNormal, OddSymmetry) {
  for (double p = 0.001; p < 0.5; p += 0.0371)
    EXPECT_NEAR(inverse_normal_cdf(p), -inverse_normal_cdf(1.0 - p), 1e-12);
}

TEST(CounterStream, PureFunctionOfAddress) {
  const CounterStream a(42, 3, StreamDomain::brownian), b(42, 3, StreamDomain::brownian);
  for (std::uint64_t i : {0ull, 1ull, 17ull, 1ull << 40}) {
    EXPECT_EQ(a.uniform(i), b.uniform(i));
    EXPECT_EQ(a.normal(i), b.normal(i));
  }
  // Reading out of order gives the same values.
  const double late = a.normal(1000);
  (void)a.normal(3);
  EXPECT_EQ(a.normal(1000), late);
}

TEST(CounterStream, StreamsAndDomainsDiffer) {
  const CounterStream a(42, 0, StreamDomain::brownian), b(42, 1, StreamDomain::brownian),
      c(42, 0, StreamDomain::initial_state), d(43, 0, StreamDomain::brownian);
  EXPECT_NE(a.uniform(0), b.uniform(0));
  EXPECT_NE(a.uniform(0), c.uniform(0));
  EXPECT_NE(a.uniform(0), d.uniform(0));
}

TEST(CounterStream, UniformsStayInsideOpenInterval) {
  const CounterStream s(7, 0, StreamDomain::test);
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const double u = s.uniform(i);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(CounterStream, NormalMoments) {
  const CounterStream s(11, 0, StreamDomain::test);
  const std::size_t n = 200000;
  double m1 = 0, m2 = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = s.normal(i);
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(CounterStream, NormalPairMatchesIndexedDraws) {
  const CounterStream s(5, 2, StreamDomain::test);
  for (std::uint64_t b = 0; b < 50; ++b) {
    const auto p = s.normal_pair(b);
    EXPECT_EQ(p[0], s.normal(2 * b));
    EXPECT_EQ(p[1], s.normal(2 * b + 1));
  }
}

TEST(ReplicaSeed, DistinctAndDeterministic) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(replica_seed(123, i));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_EQ(replica_seed(123, 77), replica_seed(123, 77));
  EXPECT_NE(replica_seed(123, 77), replica_seed(124, 77));
}

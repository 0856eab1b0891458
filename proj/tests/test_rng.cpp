// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ufoblo/errors.hpp"
#include "ufoblo/rng.hpp"

using ufoblo::RngStream;
using ufoblo::StreamPurpose;

TEST(Rng, SameSeedSameSequence) {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SubstreamsDependOnlyOnKey) {
  RngStream first = RngStream::substream(7, StreamPurpose::kBatchSlot, 3, 1);
  RngStream noise = RngStream::substream(7, StreamPurpose::kBatchSlot, 3, 2);
  for (int i = 0; i < 10; ++i) noise.next_u64();
  RngStream again = RngStream::substream(7, StreamPurpose::kBatchSlot, 3, 1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(first.next_u64(), again.next_u64());
}

TEST(Rng, DistinctKeysGiveDistinctStreams) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 0; k < 20; ++k) {
    for (std::uint64_t w = 0; w < 5; ++w) {
      firsts.insert(RngStream::substream(1, StreamPurpose::kBatchSlot, k, w).next_u64());
    }
  }
  firsts.insert(RngStream::substream(1, StreamPurpose::kDiagnostics, 0, 0).next_u64());
  EXPECT_EQ(firsts.size(), 101u);
}

TEST(Rng, UniformRangeAndMoments) {
  RngStream rng(3);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Mean 1/2, standard error sqrt(1/12 / n).
  EXPECT_LT(std::abs(sum / n - 0.5), 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-10.0, 30.0);
    ASSERT_GE(x, -10.0);
    ASSERT_LT(x, 30.0);
  }
  EXPECT_THROW(rng.uniform(1.0, 0.0), ufoblo::InvalidArgument);
}

TEST(Rng, BernoulliFrequencyAndSingleDraw) {
  RngStream rng(11);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.2) ? 1 : 0;
  const double freq = static_cast<double>(hits) / n;
  EXPECT_LT(std::abs(freq - 0.2), 4.0 * std::sqrt(0.2 * 0.8 / n));

  RngStream a(5);
  RngStream b(5);
  a.bernoulli(0.3);
  b.next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
  RngStream c(9);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(c.bernoulli(1.0));
}

TEST(Rng, NormalMoments) {
  RngStream rng(17);
  const int n = 200000;
  double s1 = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
  }
  EXPECT_LT(std::abs(s1 / n), 4.0 / std::sqrt(n));
  EXPECT_LT(std::abs(s2 / n - 1.0), 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, IndexCoversRange) {
  RngStream rng(23);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[rng.index(5)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 4.0 * std::sqrt(50000 * 0.2 * 0.8));
  EXPECT_THROW(rng.index(0), ufoblo::InvalidArgument);
}

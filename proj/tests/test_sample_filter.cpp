#include "samtrack/sample_filter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "samtrack/errors.hpp"
#include "samtrack/oracles.hpp"
#include "samtrack/rng.hpp"

namespace samtrack {
namespace {

FeatureMap map_with_peak(double peak) {
  FeatureMap m(3, 3, 1);
  m.fill(peak * 0.25);
  m.at(1, 1, 0) = peak;
  return m;
}

TEST(Uncertainty, ReciprocalOfPeak) {
  UncertaintyQueue q(20, 10.0);
  EXPECT_EQ(q.uncertainty(map_with_peak(1.0)), 1.0);
  EXPECT_EQ(q.uncertainty(map_with_peak(0.05)), 20.0);
  EXPECT_EQ(q.uncertainty(map_with_peak(0.5)), 2.0);
}

TEST(Uncertainty, WorkedExampleLowPeakGetsRemoved) {
  UncertaintyQueue q(20, 10.0);
  const double u = q.uncertainty(map_with_peak(0.05));
  EXPECT_EQ(u, 20.0);
  EXPECT_GT(u, q.hard_threshold());
  EXPECT_EQ(q.decide(u), Decision::kRemoved);
}

TEST(Uncertainty, DegeneratePeakForcesRemoval) {
  UncertaintyQueue q(20, 10.0);
  FeatureMap zeros(4, 4, 1);
  EXPECT_EQ(q.uncertainty(zeros), 11.0);
  FeatureMap negs(2, 2, 1);
  negs.fill(-3.0);
  EXPECT_EQ(q.uncertainty(negs), 11.0);
  EXPECT_EQ(q.decide(11.0), Decision::kRemoved);
}

TEST(Uncertainty, EmptyMapThrows) {
  UncertaintyQueue q(20, 10.0);
  FeatureMap empty;
  EXPECT_THROW(q.uncertainty(empty), std::invalid_argument);
}

TEST(Uncertainty, ReciprocalHomogeneityAtPowerOfTwoScales) {
  UncertaintyQueue q(20, 10.0);
  const FeatureMap base = map_with_peak(0.37);
  const double u = q.uncertainty(base);
  for (const double c : {0.5, 4.0, 1024.0}) {
    FeatureMap scaled = base;
    for (double& v : scaled.data) v *= c;
    EXPECT_EQ(q.uncertainty(scaled), u / c);
  }
}

TEST(Average, MeanOfStoredValues) {
  UncertaintyQueue q(20, 10.0);
  q.push(2.0);
  q.push(4.0);
  EXPECT_EQ(q.average(), 3.0);
}

TEST(Average, SingleValueIdentity) {
  UncertaintyQueue q(20, 10.0);
  q.push(7.25);
  EXPECT_EQ(q.average(), 7.25);
}

TEST(Average, MatchesExtendedPrecisionOracle) {
  SplitMix64 g(31);
  UncertaintyQueue q(20, 10.0);
  long double sum = 0.0L;
  for (int i = 0; i < 20; ++i) {
    const double u = g.uniform(0.1, 9.0);
    q.push(u);
    sum += u;
  }
  const double want = static_cast<double>(sum / 20.0L);
  EXPECT_NEAR(q.average(), want, 1e-12 * want);
}

TEST(Average, EmptyQueueThrows) {
  UncertaintyQueue q(20, 10.0);
  EXPECT_THROW(q.average(), StateError);
}

TEST(Decide, HardThresholdDominatesQueueState) {
  UncertaintyQueue q(20, 10.0);
  EXPECT_EQ(q.decide(20.0), Decision::kRemoved);
  for (int i = 0; i < 20; ++i) q.push(100.0);
  EXPECT_EQ(q.decide(20.0), Decision::kRemoved);
}

TEST(Decide, AverageComparison) {
  UncertaintyQueue q(20, 10.0);
  q.push(2.0);
  EXPECT_EQ(q.decide(1.0), Decision::kPreserved);
  EXPECT_EQ(q.decide(3.0), Decision::kRemoved);
}

TEST(Decide, TieWithAveragePreserves) {
  UncertaintyQueue q(20, 10.0);
  q.push(2.0);
  q.push(2.0);
  EXPECT_EQ(q.decide(2.0), Decision::kPreserved);
}

TEST(Decide, EmptyQueueBelowHardThresholdPreserves) {
  UncertaintyQueue q(20, 10.0);
  EXPECT_EQ(q.decide(9.99), Decision::kPreserved);
  EXPECT_EQ(q.decide(10.0), Decision::kPreserved);
  EXPECT_EQ(q.decide(10.00001), Decision::kRemoved);
}

TEST(Decide, MonotoneInUncertainty) {
  SplitMix64 g(32);
  for (int trial = 0; trial < 50; ++trial) {
    UncertaintyQueue q(8, 10.0);
    const int n = static_cast<int>(g.next() % 8);
    for (int i = 0; i < n; ++i) q.push(g.uniform(0.5, 9.0));
    bool removed = false;
    for (double u = 0.25; u < 16.0; u += 0.25) {
      const bool r = q.decide(u) == Decision::kRemoved;
      if (removed) {
        EXPECT_TRUE(r) << "u=" << u;
      }
      removed = removed || r;
    }
  }
}

TEST(Decide, NonFiniteThrows) {
  UncertaintyQueue q(20, 10.0);
  EXPECT_THROW(q.decide(std::numeric_limits<double>::quiet_NaN()),
               std::invalid_argument);
}

TEST(Push, FifoEviction) {
  UncertaintyQueue q(3, 10.0);
  for (double u : {1.0, 2.0, 3.0, 4.0}) q.push(u);
  EXPECT_EQ(q.values(), (std::deque<double>{2.0, 3.0, 4.0}));
}

TEST(Push, OntoEmpty) {
  UncertaintyQueue q(3, 10.0);
  q.push(5.0);
  EXPECT_EQ(q.values(), (std::deque<double>{5.0}));
}

TEST(Push, SizeSaturatesAtMaxLength) {
  UncertaintyQueue q(5, 10.0);
  for (int k = 0; k < 13; ++k) {
    q.push(1.0 + k);
    EXPECT_EQ(q.size(), std::min(k + 1, 5));
  }
}

TEST(Push, RejectsInvalidValues) {
  UncertaintyQueue q(5, 10.0);
  EXPECT_THROW(q.push(0.0), std::invalid_argument);
  EXPECT_THROW(q.push(-1.0), std::invalid_argument);
  EXPECT_THROW(q.push(std::numeric_limits<double>::infinity()),
               std::invalid_argument);
}

TEST(Queue, StateIsPureFunctionOfPushSequence) {
  SplitMix64 g(33);
  UncertaintyQueue a(6, 10.0), b(6, 10.0);
  for (int i = 0; i < 40; ++i) {
    const double u = g.uniform(0.1, 12.0);
    a.push(u);
    b.push(u);
    EXPECT_EQ(a.values(), b.values());
  }
}

TEST(Queue, MatchesStraightLineReference) {
  SplitMix64 g(34);
  for (int seq = 0; seq < 300; ++seq) {
    const int len = 5 + static_cast<int>(g.next() % 40);
    std::vector<double> peaks;
    for (int i = 0; i < len; ++i) {
      const double r = g.uniform();
      if (r < 0.1)
        peaks.push_back(0.0);
      else if (r < 0.3)
        peaks.push_back(g.uniform(0.0, 0.11));
      else
        peaks.push_back(g.uniform(0.05, 1.2));
    }
    const auto want = oracle::filter_decisions_reference(peaks, 20, 10.0);

    UncertaintyQueue q(20, 10.0);
    for (int i = 0; i < len; ++i) {
      FeatureMap m(1, 1, 1);
      m.data[0] = peaks[i];
      const double u = q.uncertainty(m);
      const Decision got = q.decide(u);
      ASSERT_EQ(got, want[i]) << "seq " << seq << " frame " << i;
      q.push(u);
    }
  }
}

TEST(Queue, RestoreValidates) {
  UncertaintyQueue q(3, 10.0);
  EXPECT_THROW(q.restore({1.0, 2.0, 3.0, 4.0}), StateError);
  EXPECT_THROW(q.restore({1.0, -2.0}), StateError);
  q.restore({1.0, 2.0});
  EXPECT_EQ(q.size(), 2);
}

TEST(Queue, ConfigValidation) {
  EXPECT_THROW(UncertaintyQueue(0, 10.0), ConfigError);
  EXPECT_THROW(UncertaintyQueue(5, 0.0), ConfigError);
}

}  // namespace
}  // namespace samtrack

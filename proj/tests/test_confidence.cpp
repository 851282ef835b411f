#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "cuts3d/confidence.hpp"

using namespace cuts3d;

namespace {

constexpr double kTauMin = 0.05;
constexpr double kTauMax = 0.115;
constexpr int kSteps = 6;

EigenSolution ramp_solution(int n) {
  EigenSolution e;
  e.vector = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
  e.node_ids.resize(static_cast<std::size_t>(n));
  std::iota(e.node_ids.begin(), e.node_ids.end(), 0);
  return e;
}

Bipartition from_mask(const Mask& m, int seed_max, int seed_min) {
  Bipartition b;
  for (int i = 0; i < static_cast<int>(m.size()); ++i) (m[static_cast<std::size_t>(i)] ? b.foreground : b.background).push_back(i);
  b.seed_max = seed_max;
  b.seed_min = seed_min;
  return b;
}

// A 30x30 grid (spacing 1/30, below every swept threshold) with an object on
// rows 5..14, columns 4..15. Its depth climbs in steps of `step` starting at
// column `ramp_from`.
constexpr int kSide = 30;
constexpr int kNodes = kSide * kSide;
constexpr int kCorner = 5 * kSide + 4;

struct Staircase {
  DepthMap depth{kSide, kSide, 0.95f};
  Mask object{kSide, kSide, 0};
};

Staircase staircase(double step, int ramp_from) {
  Staircase s;
  for (int r = 5; r < 15; ++r)
    for (int c = 4; c < 16; ++c) {
      s.object(r, c) = 1;
      s.depth(r, c) = static_cast<float>(0.3 + (c >= ramp_from ? step * (c - ramp_from + 1) : 0.0));
    }
  return s;
}

}  // namespace

TEST(SweepThresholds, LinearAndExactAtBothEnds) {
  const auto taus = sweep_thresholds(kSteps, kTauMin, kTauMax);
  ASSERT_EQ(taus.size(), 6u);
  EXPECT_EQ(taus.front(), 0.05);
  EXPECT_EQ(taus.back(), 0.115);
  for (int t = 0; t < 6; ++t) EXPECT_NEAR(taus[static_cast<std::size_t>(t)], 0.05 + 0.013 * t, 1e-15);
  EXPECT_THROW(sweep_thresholds(1, kTauMin, kTauMax), Error);
  EXPECT_THROW(sweep_thresholds(6, 0.2, 0.1), Error);
  EXPECT_THROW(sweep_thresholds(6, 0.0, 0.1), Error);
}

TEST(ConfidenceSweep, CrispObjectHasFullConfidence) {
  const auto s = staircase(0.0, 100);
  const auto b = from_mask(s.object, kCorner, 0);
  const auto r = confidence_sweep(b, ramp_solution(kNodes), s.depth, kSide, kSide, {}, kSteps, kTauMin, kTauMax);
  EXPECT_FALSE(r.seed_conflict);
  EXPECT_EQ(r.mask, s.object);
  EXPECT_EQ(r.confidence.region, s.object);
  for (std::size_t i = 0; i < s.object.size(); ++i) EXPECT_EQ(r.confidence.values[i], s.object[i] ? 1.0 : 0.0);
}

TEST(ConfidenceSweep, MatchesIndependentCuts) {
    for (double step : {0.06, 0.07, 0.09}) {
    const auto s = staircase(step, 9);
    const auto b = from_mask(s.object, kCorner, 0);
    const auto e = ramp_solution(kNodes);
    const auto r = confidence_sweep(b, e, s.depth, kSide, kSide, {}, kSteps, kTauMin, kTauMax);
    Grid<int> votes(kSide, kSide, 0);
    Mask last;
    for (double tau : sweep_thresholds(kSteps, kTauMin, kTauMax)) {
      LocalCutOptions opt;
      opt.tau_knn = tau;
      last = local_cut(b, e, s.depth, kSide, kSide, opt).mask;
      for (std::size_t i = 0; i < last.size(); ++i) votes[i] += last[i];
    }
    EXPECT_EQ(r.mask, last) << "step " << step;
    for (std::size_t i = 0; i < votes.size(); ++i) {
      EXPECT_EQ(r.votes[i], votes[i]);
      EXPECT_EQ(r.confidence.values[i], votes[i] / 6.0);
      EXPECT_EQ(r.confidence.region[i], votes[i] > 0 ? 1 : 0);
    }
  }
}

// Steps of 0.07 are cut at the lower thresholds and bridged at the higher ones.
TEST(ConfidenceSweep, PartialVotesOnASteppedObject) {
  const auto s = staircase(0.07, 9);
  const auto b = from_mask(s.object, kCorner, 0);
  const auto r = confidence_sweep(b, ramp_solution(kNodes), s.depth, kSide, kSide, {}, kSteps, kTauMin, kTauMax);
  bool partial = false;
  for (std::size_t i = 0; i < r.votes.size(); ++i) {
    EXPECT_GE(r.votes[i], 0);
    EXPECT_LE(r.votes[i], 6);
    if (r.votes[i] > 0 && r.votes[i] < 6) partial = true;
    if (r.mask[i]) {
      EXPECT_GE(r.confidence.values[i], 1.0 / 6.0);
    }
    if (!s.object[i]) {
      EXPECT_EQ(r.votes[i], 0);
    }
  }
  EXPECT_TRUE(partial);
  EXPECT_EQ(r.votes(5, 4), 6);
}

TEST(ConfidenceSweep, SeedConflictGivesFullConfidenceOnB) {
  const DepthMap d(6, 6, 0.5f);
  Mask m(6, 6, 0);
  m(1, 1) = m(1, 2) = 1;
  const auto r = confidence_sweep(from_mask(m, 30, 35), ramp_solution(36), d, 6, 6, {}, kSteps, kTauMin, kTauMax);
  EXPECT_TRUE(r.seed_conflict);
  EXPECT_EQ(r.mask, m);
  EXPECT_EQ(r.confidence.region, m);
  EXPECT_EQ(r.confidence.values(1, 1), 1.0);
  EXPECT_EQ(r.votes(1, 2), 6);
}

TEST(ConfidenceSweep, Deterministic) {
  const auto s = staircase(0.07, 9);
  const auto b = from_mask(s.object, kCorner, 0);
  const auto e = ramp_solution(kNodes);
  const auto r1 = confidence_sweep(b, e, s.depth, kSide, kSide, {}, kSteps, kTauMin, kTauMax);
  const auto r2 = confidence_sweep(b, e, s.depth, kSide, kSide, {}, kSteps, kTauMin, kTauMax);
  EXPECT_EQ(std::memcmp(r1.confidence.values.values().data(), r2.confidence.values.values().data(),
                        r1.confidence.values.size() * sizeof(double)),
            0);
  EXPECT_EQ(r1.mask, r2.mask);
}

TEST(ClampConfidence, Examples) {
  SpatialConfidenceMap sc{Grid<double>(1, 4, 0.0), Mask(1, 4, 1)};
  sc.values[0] = 1.0 / 6.0;
  sc.values[1] = 0.83;
  sc.values[2] = 0.5;
  sc.values[3] = 0.0;
  sc.region[3] = 0;
  const auto out = clamp_confidence(sc, 0.5);
  EXPECT_EQ(out.values[0], 0.5);
  EXPECT_EQ(out.values[1], 0.83);
  EXPECT_EQ(out.values[2], 0.5);
  EXPECT_EQ(out.values[3], 0.0);
  EXPECT_THROW(clamp_confidence(sc, 1.5), Error);
  EXPECT_THROW(clamp_confidence(sc, -0.1), Error);
}

TEST(MeanConfidence, Examples) {
  SpatialConfidenceMap sc{Grid<double>(2, 2, 1.0), Mask(2, 2, 1)};
  const Mask m(2, 2, 1);
  EXPECT_EQ(mean_confidence(sc, m), 1.0);
  sc.values(1, 0) = sc.values(1, 1) = 0.5;
  EXPECT_EQ(mean_confidence(sc, m), 0.75);
  try {
    mean_confidence(sc, Mask(2, 2, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
  EXPECT_THROW(mean_confidence(sc, Mask(3, 2, 1)), Error);
}

TEST(MeanConfidence, MatchesDirectSummation) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    SpatialConfidenceMap sc{Grid<double>(9, 7), Mask(9, 7, 1)};
    Mask m(9, 7, 0);
    for (auto& v : sc.values) v = u(rng);
    m[static_cast<std::size_t>(t % 63)] = 1;
    for (auto& v : m) v = v || u(rng) < 0.4;
    long double sum = 0;
    int n = 0;
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 7; ++c)
        if (m(r, c)) sum += sc.values(r, c), ++n;
    EXPECT_NEAR(mean_confidence(sc, m), static_cast<double>(sum / n), 1e-9);
  }
}

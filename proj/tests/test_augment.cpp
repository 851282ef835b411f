#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cuts3d/augment.hpp"

using namespace cuts3d;

namespace {

PseudoInstance instance(int index, double confidence, int area) {
  PseudoInstance p;
  p.instance_index = index;
  p.mean_confidence = confidence;
  p.mask = Mask(4, 4, 0);
  for (int i = 0; i < area; ++i) p.mask[static_cast<std::size_t>(i)] = 1;
  return p;
}

SpatialConfidenceMap uniform_confidence(const Mask& m, double value) {
  SpatialConfidenceMap sc{Grid<double>(m.height(), m.width(), 0.0), m};
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) sc.values[i] = value;
  return sc;
}

double bce(double p, double t) { return -(t * std::log(p) + (1.0 - t) * std::log1p(-p)); }

}  // namespace

TEST(SelectConfident, OrdersByConfidence) {
  PseudoAnnotationSet s{"img", {instance(0, 0.9, 3), instance(1, 0.6, 5), instance(2, 0.8, 1)}};
  EXPECT_EQ(select_confident(s, 2), (std::vector<int>{0, 2}));
  EXPECT_EQ(select_confident(s, 3), (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(select_confident(s, 10), (std::vector<int>{0, 2, 1}));
  EXPECT_THROW(select_confident(s, 0), Error);
}

TEST(SelectConfident, TiesByAreaThenIndex) {
  PseudoAnnotationSet s{"img", {instance(0, 0.7, 2), instance(1, 0.7, 6), instance(2, 0.7, 4), instance(3, 0.7, 6)}};
  EXPECT_EQ(select_confident(s, 4), (std::vector<int>{1, 3, 2, 0}));
  PseudoAnnotationSet empty{"none", {}};
  EXPECT_TRUE(select_confident(empty, 3).empty());
}

TEST(AlphaBlend, ArithmeticExample) {
  const FloatImage src(8, 8, 0.8f), dst(8, 8, 0.4f);
  const Mask m(1, 1, 1);
  const auto out = alpha_blend_paste(src, dst, m, uniform_confidence(m, 0.5), 1.0, 0, 0);
  for (float v : out.image.pixels) EXPECT_NEAR(v, 0.6f, 1e-6f);
}

TEST(AlphaBlend, FullConfidenceCopiesSource) {
  std::mt19937 rng(51);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FloatImage src(16, 16), dst(16, 16);
  for (auto& v : src.pixels) v = u(rng);
  for (auto& v : dst.pixels) v = u(rng);
  Mask m(2, 2, 0);
  m(0, 1) = 1;
  const auto out = alpha_blend_paste(src, dst, m, uniform_confidence(m, 1.0), 1.0, 0, 0);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const bool pasted = r < 8 && c >= 8;
        EXPECT_EQ(out.image.at(r, c)[ch], (pasted ? src : dst).at(r, c)[ch]);
      }
}

TEST(AlphaBlend, ZeroConfidenceIsIdentity) {
  const FloatImage src(8, 8, 0.9f), dst(8, 8, 0.1f);
  const Mask m(2, 2, 1);
  const auto out = alpha_blend_paste(src, dst, m, uniform_confidence(m, 0.0), 1.0, 0, 0);
  EXPECT_EQ(out.image.pixels, dst.pixels);
}

TEST(AlphaBlend, ConvexCombination) {
  std::mt19937 rng(52);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int t = 0; t < 20; ++t) {
    const float colour = u(rng);
    const FloatImage src(24, 24, colour);
    FloatImage dst(30, 20);
    for (auto& v : dst.pixels) v = u(rng);
    Mask m(3, 3, 0);
    for (auto& v : m) v = u(rng) < 0.6f;
    m(1, 1) = 1;
    SpatialConfidenceMap sc{Grid<double>(3, 3, 0.0), m};
    for (std::size_t i = 0; i < m.size(); ++i) sc.values[i] = m[i] ? 0.5 + 0.5 * u(rng) : 0.0;
    const double scale = 0.3 + 0.7 * u(rng);
    const auto out = alpha_blend_paste(src, dst, m, sc, scale, static_cast<int>(rng() % 10), static_cast<int>(rng() % 10));
    for (int r = 0; r < dst.height; ++r)
      for (int c = 0; c < dst.width; ++c)
        for (int ch = 0; ch < 3; ++ch) {
          const float o = out.image.at(r, c)[ch];
          const float d = dst.at(r, c)[ch];
          EXPECT_GE(o, std::min(d, colour) - 1e-6f);
          EXPECT_LE(o, std::max(d, colour) + 1e-6f);
        }
    ASSERT_EQ(out.provenance.size(), 1u);
    EXPECT_EQ(out.provenance[0].scale, scale);
  }
}

TEST(AlphaBlend, ScaleRangeAndDegeneratePlacement) {
  const FloatImage src(8, 8, 0.5f), dst(8, 8, 0.5f);
  const Mask m(1, 1, 1);
  const auto sc = uniform_confidence(m, 1.0);
  EXPECT_NO_THROW(alpha_blend_paste(src, dst, m, sc, 0.3, 0, 0));
  EXPECT_THROW(alpha_blend_paste(src, dst, m, sc, 0.29, 0, 0), Error);
  EXPECT_THROW(alpha_blend_paste(src, dst, m, sc, 1.01, 0, 0), Error);
  try {
    alpha_blend_paste(src, dst, m, sc, 1.0, 100, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateScale);
  }
  try {
    alpha_blend_paste(src, dst, Mask(1, 1, 0), uniform_confidence(Mask(1, 1, 0), 1.0), 1.0, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateScale);
  }
}

TEST(AlphaBlend, ScaledPasteLandsAtOffset) {
  FloatImage src(10, 10, 1.0f);
  const FloatImage dst(20, 20, 0.0f);
  const Mask m(1, 1, 1);
  const auto out = alpha_blend_paste(src, dst, m, uniform_confidence(m, 1.0), 0.5, 4, 6);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) {
      const bool inside = r >= 6 && r < 11 && c >= 4 && c < 9;
      EXPECT_EQ(out.image.at(r, c)[0], inside ? 1.0f : 0.0f) << r << "," << c;
    }
}

TEST(SoftTargetLoss, SinglePixelExample) {
  const Grid<double> pred(1, 1, 0.5);
  const Mask target(1, 1, 1);
  const auto r = soft_target_bce(pred, target, uniform_confidence(target, 0.5));
  EXPECT_NEAR(r.loss, 0.34657359027997264, 1e-15);
  EXPECT_NEAR(r.grad[0], 0.5 * (0.5 - 1.0) / 0.25, 1e-15);
}

TEST(SoftTargetLoss, UnitConfidenceIsPlainBce) {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Grid<double> pred(5, 6);
  Mask target(5, 6, 0);
  for (auto& v : pred) v = u(rng);
  for (auto& v : target) v = u(rng) < 0.5;
  double expected = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) expected += bce(pred[i], target[i]);
  EXPECT_NEAR(soft_target_bce(pred, target, uniform_confidence(Mask(5, 6, 1), 1.0)).loss, expected, 1e-12);
  // outside the confidence region the weight is 1
  EXPECT_NEAR(soft_target_bce(pred, target, uniform_confidence(Mask(5, 6, 0), 0.0)).loss, expected, 1e-12);
}

TEST(SoftTargetLoss, PerfectPredictionIsNearZero) {
  Mask target(4, 4, 0);
  target(1, 2) = target(3, 3) = 1;
  Grid<double> pred(4, 4);
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = target[i];
  const auto r = soft_target_bce(pred, target, uniform_confidence(Mask(4, 4, 1), 1.0));
  EXPECT_LE(r.loss, 16 * bce(1.0 - 1e-7, 1.0) * (1.0 + 1e-9));
  EXPECT_LT(r.loss, 2e-6);
}

TEST(SoftTargetLoss, MonotoneInConfidence) {
  std::mt19937 rng(54);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Grid<double> pred(3, 3);
  Mask target(3, 3, 0);
  for (auto& v : pred) v = u(rng);
  for (auto& v : target) v = u(rng) < 0.5;
  auto sc = uniform_confidence(Mask(3, 3, 1), 0.5);
  double previous = soft_target_bce(pred, target, sc).loss;
  for (std::size_t i = 0; i < sc.values.size(); ++i) {
    sc.values[i] = 0.9;
    const double now = soft_target_bce(pred, target, sc).loss;
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(SoftTargetLoss, GradientMatchesFiniteDifferences) {
  std::mt19937 rng(55);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 100; ++t) {
    Grid<double> pred(3, 4);
    Mask target(3, 4, 0), region(3, 4, 0);
    for (auto& v : pred) v = u(rng);
    for (auto& v : target) v = u(rng) < 0.5;
    for (auto& v : region) v = u(rng) < 0.7;
    SpatialConfidenceMap sc{Grid<double>(3, 4, 0.0), region};
    for (std::size_t i = 0; i < region.size(); ++i) sc.values[i] = region[i] ? 0.5 + 0.5 * u(rng) : 0.0;
    const auto r = soft_target_bce(pred, target, sc);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      auto hi = pred, lo = pred;
      hi[i] += 1e-5;
      lo[i] -= 1e-5;
      const double fd = (soft_target_bce(hi, target, sc).loss - soft_target_bce(lo, target, sc).loss) / 2e-5;
      EXPECT_LE(std::abs(fd - r.grad[i]), 1e-4 * std::abs(r.grad[i])) << "instance " << t;
    }
  }
}

TEST(SoftTargetLoss, ShapeMismatch) {
  try {
    soft_target_bce(Grid<double>(2, 2, 0.5), Mask(2, 3, 0), uniform_confidence(Mask(2, 2, 1), 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

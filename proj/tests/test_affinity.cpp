#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cuts3d/affinity.hpp"

using namespace cuts3d;

namespace {

FeatureMap random_features(std::mt19937& rng, int c, int h, int w) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMap f{c, h, w, std::vector<float>(static_cast<std::size_t>(c * h * w))};
  for (auto& v : f.data) v = n(rng);
  return f;
}

// Direct 2-D windowed convolution with its own reflection rule, used as an
// independent reference for the separable blur.
Grid<double> dense_importance(const DepthMap& d, double sigma, double beta) {
  const int r = static_cast<int>(std::ceil(4 * sigma));
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Grid<double> delta(d.height(), d.width());
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) {
      double acc = 0.0, norm = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double g = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          acc += g * d(reflect(y + dy, d.height()), reflect(x + dx, d.width()));
          norm += g;
        }
      delta(y, x) = std::abs(acc / norm - d(y, x));
    }
  double lo = 1e300, hi = -1e300;
  for (double v : delta) lo = std::min(lo, v), hi = std::max(hi, v);
  for (auto& v : delta) v = hi > lo ? beta + (1 - beta) * (v - lo) / (hi - lo) : beta;
  return delta;
}

}  // namespace

TEST(CosineAffinity, AnalyticPair) {
  FeatureMap f{2, 1, 2, {1.0f, 1.0f, 0.0f, 1.0f}};  // f0 = (1,0), f1 = (1,1)
  const auto w = cosine_affinity(f);
  EXPECT_NEAR(w.weights(0, 1), 1.0 / std::sqrt(2.0), 1e-6);
  EXPECT_EQ(w.weights(0, 1), w.weights(1, 0));
  EXPECT_EQ(w.weights(0, 0), 1.0f);
}

TEST(CosineAffinity, SymmetricWithUnitDiagonal) {
  std::mt19937 rng(1);
  const auto w = cosine_affinity(random_features(rng, 8, 5, 6));
  EXPECT_TRUE(w.weights.isApprox(w.weights.transpose(), 0.0f));
  for (int i = 0; i < w.nodes(); ++i) EXPECT_EQ(w.weights(i, i), 1.0f);
  EXPECT_LE(w.weights.maxCoeff(), 1.0f);
  EXPECT_GE(w.weights.minCoeff(), -1.0f);
}

TEST(CosineAffinity, InvariantToPositivePatchRescaling) {
  std::mt19937 rng(2);
  auto f = random_features(rng, 6, 4, 5);
  auto g = f;
  std::uniform_real_distribution<float> s(0.01f, 100.0f);
  for (int i = 0; i < f.nodes(); ++i) {
    const float k = s(rng);
    for (int c = 0; c < f.channels; ++c) g.data[static_cast<std::size_t>(c * f.nodes() + i)] *= k;
  }
  const auto a = cosine_affinity(f), b = cosine_affinity(g);
  EXPECT_LE((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(CosineAffinity, ZeroPatchIsAnError) {
  FeatureMap f{2, 1, 2, {1.0f, 0.0f, 1.0f, 0.0f}};
  try {
    cosine_affinity(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVectorPatch);
  }
}

TEST(SpatialImportance, ConstantDepthIsBeta) {
  const auto s = spatial_importance(DepthMap(9, 7, 0.25f), 2.0, 0.45);
  for (double v : s) EXPECT_EQ(v, 0.45);
}

TEST(SpatialImportance, MatchesDenseConvolutionOracle) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto [h, w] : {std::pair{12, 15}, std::pair{3, 20}, std::pair{1, 6}}) {
    DepthMap d(h, w);
    for (auto& v : d) v = u(rng);
    const auto fast = spatial_importance(d, 2.0, 0.45);
    const auto ref = dense_importance(d, 2.0, 0.45);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(fast[i], ref[i], 1e-12);
  }
}

TEST(SpatialImportance, StepProfilePeaksAtTheStep) {
  DepthMap d(10, 30, 0.2f);
  for (int r = 0; r < 10; ++r)
    for (int c = 15; c < 30; ++c) d(r, c) = 0.8f;
  const auto s = spatial_importance(d, 2.0, 0.45);
  const auto ref = dense_importance(d, 2.0, 0.45);
  double peak = 0;
  for (double v : s) peak = std::max(peak, v);
  EXPECT_EQ(peak, 1.0);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 30; ++c) {
      EXPECT_NEAR(s(r, c), ref(r, c), 1e-12);
      if (c == 14 || c == 15) EXPECT_NEAR(s(r, c), 1.0, 1e-12);
      else EXPECT_LT(s(r, c), 1.0 - 1e-6);
    }
}

TEST(SpatialImportance, NonConstantDepthReachesOne) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int t = 0; t < 10; ++t) {
    DepthMap d(6, 8);
    for (auto& v : d) v = u(rng);
    const auto s = spatial_importance(d, 2.0, 0.45);
    EXPECT_EQ(*std::max_element(s.begin(), s.end()), 1.0);
    EXPECT_EQ(*std::min_element(s.begin(), s.end()), 0.45);
  }
}

TEST(SpatialImportance, InvariantToDepthOffset) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 0.5f);
  DepthMap d(8, 8), e(8, 8);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = u(rng);
    e[i] = d[i] + 0.25f;
  }
  const auto a = spatial_importance(d, 2.0, 0.45), b = spatial_importance(e, 2.0, 0.45);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(SpatialImportance, RejectsBadParameters) {
  EXPECT_THROW(spatial_importance(DepthMap(2, 2, 0.f), 0.0, 0.45), Error);
  EXPECT_THROW(spatial_importance(DepthMap(2, 2, 0.f), 2.0, 1.0), Error);
}

TEST(Sharpen, ExponentZeroGivesOne) {
  AffinityMatrix w{1, 2, Eigen::MatrixXf(2, 2)};
  w.weights << 1.0f, 0.2f, 0.2f, 1.0f;
  SpatialImportanceMap s(1, 2);
  s[0] = 1.0;
  s[1] = 0.45;
  EXPECT_EQ(sharpen(w, s).weights(0, 1), 1.0f);
}

TEST(Sharpen, HalfWithBetaExponent) {
  AffinityMatrix w{1, 2, Eigen::MatrixXf(2, 2)};
  w.weights << 1.0f, 0.5f, 0.5f, 1.0f;
  const SpatialImportanceMap s(1, 2, 0.45);
  // 0.5^0.55 evaluated at high precision: 0.683020128...
  EXPECT_NEAR(sharpen(w, s).weights(0, 1), 0.6830201284, 1e-7);
}

TEST(Sharpen, NegativeAndTinyEntriesAreClamped) {
  AffinityMatrix w{1, 2, Eigen::MatrixXf(2, 2)};
  w.weights << 1.0f, -0.7f, -0.7f, 1.0f;
  const SpatialImportanceMap s(1, 2, 0.45);
  const auto out = sharpen(w, s).weights(0, 1);
  EXPECT_NEAR(out, std::pow(1e-5, 0.55), 1e-8);
  EXPECT_TRUE(std::isfinite(out));
}

TEST(Sharpen, CombineRules) {
  EXPECT_EQ(combine_importance(0.5, 0.8, ExponentCombine::Max), 0.8);
  EXPECT_DOUBLE_EQ(combine_importance(0.5, 0.8, ExponentCombine::Mean), 0.65);
  EXPECT_DOUBLE_EQ(combine_importance(0.5, 0.8, ExponentCombine::GeometricMean), std::sqrt(0.4));
  for (auto c : {ExponentCombine::Max, ExponentCombine::Mean, ExponentCombine::GeometricMean})
    EXPECT_EQ(parse_exponent_combine(to_string(c)), c);
  EXPECT_THROW(parse_exponent_combine("outer"), Error);
}

TEST(Sharpen, NeverDecreasesAndStaysSymmetric) {
  std::mt19937 rng(8);
  auto w = cosine_affinity(random_features(rng, 5, 6, 6));
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  DepthMap d(6, 6);
  for (auto& v : d) v = u(rng);
  const auto out = sharpen(w, spatial_importance(d, 2.0, 0.45));
  EXPECT_TRUE(out.weights.isApprox(out.weights.transpose(), 0.0f));
  for (Eigen::Index i = 0; i < w.weights.size(); ++i)
    EXPECT_GE(out.weights.data()[i], std::clamp(w.weights.data()[i], kEpsilonWeight, 1.0f));
}

TEST(Sharpen, UniformImportancePreservesOrdering) {
  std::mt19937 rng(9);
  auto w = cosine_affinity(random_features(rng, 5, 4, 4));
  const auto out = sharpen(w, spatial_importance(DepthMap(4, 4, 0.3f), 2.0, 0.45));
  const auto n = w.weights.size();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const float x = std::clamp(w.weights.data()[a], kEpsilonWeight, 1.0f);
      const float y = std::clamp(w.weights.data()[b], kEpsilonWeight, 1.0f);
      if (x < y) {
        EXPECT_LE(out.weights.data()[a], out.weights.data()[b]);
      }
    }
}

TEST(Binarize, TwoValuesWithTiesPassing) {
  AffinityMatrix w{1, 3, Eigen::MatrixXf(3, 3)};
  w.weights << 1.0f, 0.13f, 0.1299f, 0.13f, 1.0f, -0.5f, 0.1299f, -0.5f, 1.0f;
  const auto b = binarize(w, 0.13f);
  EXPECT_EQ(b.weights(0, 1), 1.0f);
  EXPECT_EQ(b.weights(0, 2), kEpsilonWeight);
  EXPECT_EQ(b.weights(1, 2), kEpsilonWeight);
  for (Eigen::Index i = 0; i < b.weights.size(); ++i) {
    const float v = b.weights.data()[i];
    EXPECT_TRUE(v == 1.0f || v == kEpsilonWeight);
  }
}

TEST(Binarize, AllAboveThresholdGivesOnes) {
  AffinityMatrix w{2, 2, Eigen::MatrixXf::Constant(4, 4, 0.5f)};
  EXPECT_EQ(binarize(w, 0.13f).weights, Eigen::MatrixXf::Ones(4, 4));
  EXPECT_THROW(binarize(w, 0.0f), Error);
  EXPECT_THROW(binarize(w, 1.0f), Error);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cuts3d/refine.hpp"

using namespace cuts3d;

namespace {

RgbImage uniform_image(int w, int h, std::uint8_t v) {
  RgbImage img(w, h);
  std::fill(img.pixels.begin(), img.pixels.end(), v);
  return img;
}

int boundary_pixels(const Mask& m) {
  int count = 0;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      if (!m(r, c)) continue;
      const bool edge = r == 0 || c == 0 || r + 1 == m.height() || c + 1 == m.width() || !m(r - 1, c) ||
                        !m(r + 1, c) || !m(r, c - 1) || !m(r, c + 1);
      count += edge ? 1 : 0;
    }
  return count;
}

double tent(double d) { return std::max(0.0, 1.0 - std::abs(d)); }

}  // namespace

TEST(UpsampleMask, AllOnes) {
  const auto s = upsample_mask(Mask(5, 7, 1), 40, 56);
  for (double v : s) EXPECT_EQ(v, 1.0);
}

TEST(UpsampleMask, SinglePatchIsASeparableTent) {
  Mask m(5, 5, 0);
  m(2, 2) = 1;
  const auto s = upsample_mask(m, 40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      const double fy = std::clamp((y + 0.5) / 8.0 - 0.5, 0.0, 4.0);
      const double fx = std::clamp((x + 0.5) / 8.0 - 0.5, 0.0, 4.0);
      EXPECT_NEAR(s(y, x), tent(fy - 2.0) * tent(fx - 2.0), 1e-15);
      EXPECT_GE(s(y, x), 0.0);
      EXPECT_LE(s(y, x), 1.0);
    }
  // Peak values sit on the four pixels nearest the patch center; the value
  // falls off linearly toward the neighbouring patch centers.
  EXPECT_EQ(s(19, 19), 0.9375 * 0.9375);
  EXPECT_EQ(s(16, 19), 0.5625 * 0.9375);
  EXPECT_EQ(s(0, 0), 0.0);
}

TEST(UpsampleMask, RoundTripOnRandomMasks) {
  std::mt19937 rng(41);
  for (int t = 0; t < 20; ++t) {
    Mask m(12, 9, 0);
    for (auto& v : m) v = (rng() % 2) != 0;
    const auto s = upsample_mask(m, 96, 72);
    for (int pr = 0; pr < 12; ++pr)
      for (int pc = 0; pc < 9; ++pc) {
        bool uniform_neighbourhood = true;
        double mean = 0.0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int r = std::clamp(pr + dr, 0, 11), c = std::clamp(pc + dc, 0, 8);
            uniform_neighbourhood = uniform_neighbourhood && m(r, c) == m(pr, pc);
          }
        for (int y = pr * 8; y < pr * 8 + 8; ++y)
          for (int x = pc * 8; x < pc * 8 + 8; ++x) {
            mean += s(y, x) / 64.0;
            if (uniform_neighbourhood) {
              EXPECT_EQ(s(y, x) > 0.5, m(pr, pc) != 0);
            }
          }
        // A patch keeps more than half the weight of its own footprint.
        EXPECT_EQ(mean > 0.5, m(pr, pc) != 0) << "patch " << pr << "," << pc;
      }
  }
}

TEST(UpsampleMask, RejectsShrinking) { EXPECT_THROW(upsample_mask(Mask(8, 8, 1), 4, 8), Error); }

TEST(CrfRefine, ZeroPairwiseIsThresholding) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RgbImage img(100, 80);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
  SoftMask soft(80, 100);
  for (auto& v : soft) v = u(rng);
  soft[0] = 0.5;
  soft[1] = 1.0;
  soft[2] = 0.0;
  CrfParams p;
  p.spatial_weight = 0.0;
  p.bilateral_weight = 0.0;
  const auto out = crf_refine(img, soft, p);
  for (std::size_t i = 0; i < soft.size(); ++i) EXPECT_EQ(out[i], soft[i] > 0.5 ? 1 : 0) << "pixel " << i;
}

namespace {

struct NoisyDisc {
  RgbImage image = uniform_image(120, 120, 128);
  SoftMask soft{120, 120, 0.0};
  Mask input{120, 120, 0};
  Mask disc{120, 120, 0};
};

NoisyDisc noisy_disc() {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NoisyDisc d;
  for (int r = 0; r < 120; ++r)
    for (int c = 0; c < 120; ++c) {
      const bool inside = std::hypot(r - 60.0, c - 60.0) < 30.0;
      d.disc(r, c) = inside;
      d.soft(r, c) = std::clamp((inside ? 0.8 : 0.2) + (u(rng) - 0.5) * 0.9, 0.0, 1.0);
      d.input(r, c) = d.soft(r, c) > 0.5;
    }
  return d;
}

}  // namespace

TEST(CrfRefine, SmoothsNoisyBlobOnUniformImage) {
  const auto d = noisy_disc();
  const auto out = crf_refine(d.image, d.soft);
  EXPECT_LT(boundary_pixels(out), boundary_pixels(d.input));
}

// Without colour contrast the appearance kernel acts as a broad blur, so the
// short-range kernel alone shows the local cleanup.
TEST(CrfRefine, SpatialKernelCleansNoisyBlob) {
  const auto d = noisy_disc();
  CrfParams p;
  p.bilateral_weight = 0.0;
  const auto out = crf_refine(d.image, d.soft, p);
  EXPECT_LT(boundary_pixels(out), boundary_pixels(d.input) / 4);
  EXPECT_GE(mask_iou(out, d.disc), 0.9);
  EXPECT_GT(mask_iou(out, d.disc), mask_iou(d.input, d.disc));
}

TEST(CrfRefine, SnapsToColorEdge) {
  RgbImage img(96, 96);
  Mask truth(96, 96, 0);
  for (int r = 0; r < 96; ++r)
    for (int c = 0; c < 96; ++c) {
      const bool inside = r >= 20 && r < 70 && c >= 30 && c < 75;
      truth(r, c) = inside;
      auto* p = img.at(r, c);
      p[0] = inside ? 220 : 40;
      p[1] = inside ? 60 : 90;
      p[2] = inside ? 50 : 200;
    }
  // The patch-level prediction is shifted by three pixels.
  Mask patches(12, 12, 0);
  for (int r = 3; r < 9; ++r)
    for (int c = 4; c < 10; ++c) patches(r, c) = 1;
  const auto soft = upsample_mask(patches, 96, 96);
  Mask input(96, 96, 0);
  for (std::size_t i = 0; i < soft.size(); ++i) input[i] = soft[i] > 0.5;
  const auto out = crf_refine(img, soft);
  EXPECT_GT(mask_iou(out, truth), mask_iou(input, truth));
  EXPECT_GE(mask_iou(out, truth), 0.9);
}

TEST(CrfRefine, DistributionsStayNormalized) {
  std::mt19937 rng(44);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RgbImage img(64, 48);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
  SoftMask soft(48, 64);
  for (auto& v : soft) v = u(rng);
  int calls = 0;
  crf_refine(img, soft, {}, [&](int it, const std::vector<double>& fg, const std::vector<double>& bg) {
    EXPECT_EQ(it, calls);
    ++calls;
    ASSERT_EQ(fg.size(), bg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) {
      EXPECT_GE(fg[i], 0.0);
      EXPECT_LE(fg[i], 1.0);
      EXPECT_LE(std::abs(fg[i] + bg[i] - 1.0), 1e-6);
    }
  });
  EXPECT_EQ(calls, 10);
}

TEST(CrfRefine, WorkingLatticeIsBounded) {
  const auto img = uniform_image(480, 320, 10);
  const DenseCrf crf(img, {});
  EXPECT_EQ(crf.working_width(), 60);
  EXPECT_EQ(crf.working_height(), 40);
  const DenseCrf small(uniform_image(30, 20, 10), {});
  EXPECT_EQ(small.working_width(), 30);
  EXPECT_EQ(small.working_height(), 20);
  CrfParams p;
  p.working_side = 121;
  EXPECT_THROW(DenseCrf(img, p), Error);
  EXPECT_THROW(crf.refine(SoftMask(10, 10, 0.5)), Error);
}

TEST(CrfRefine, Deterministic) {
  std::mt19937 rng(45);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RgbImage img(80, 80);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
  SoftMask soft(80, 80);
  for (auto& v : soft) v = u(rng);
  EXPECT_EQ(crf_refine(img, soft), crf_refine(img, soft));
}

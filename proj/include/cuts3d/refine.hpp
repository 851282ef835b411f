#pragma once

// Two-label fully connected CRF (mean-field) used to snap upsampled patch
// masks to image edges.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/image.hpp"
#include "cuts3d/resample.hpp"

namespace cuts3d {

/// Foreground probability per pixel.
using SoftMask = Grid<double>;

inline SoftMask upsample_mask(const Mask& m, int height, int width) {
  require(height >= m.height() && width >= m.width(), ErrorCode::InvalidArgument,
          "upsample target is smaller than the mask");
  return bilinear_resize<double>(m, height, width);
}

struct CrfParams {
  int iterations = 10;
  double spatial_sigma = 3.0;  // working-resolution pixels
  double spatial_weight = 3.0;
  double bilateral_sigma_xy = 30.0;
  double bilateral_sigma_rgb = 13.0;
  double bilateral_weight = 10.0;
  int working_side = 60;  // longest side of the inference lattice, at most 120; 60 puts one cell on each 8 px patch of a 480 px image
  double probability_clamp = 1e-3;
};

/// Called after every mean-field iteration with (iteration, Q_fg, Q_bg).
using CrfObserver = std::function<void(int, const std::vector<double>&, const std::vector<double>&)>;

/// Precomputes the pairwise kernel for one image so several masks can be
/// refined against it. Both Gaussian kernels are symmetrically normalized,
/// with self-pairs excluded.
class DenseCrf {
 public:
  DenseCrf(const RgbImage& image, const CrfParams& params) : params_(params), height_(image.height), width_(image.width) {
    require(image.width > 0 && image.height > 0, ErrorCode::InvalidArgument, "empty image");
    require(params.working_side >= 1 && params.working_side <= 120, ErrorCode::InvalidArgument,
            "CRF working side must lie in [1, 120]");
    require(params.iterations >= 0, ErrorCode::InvalidArgument, "negative CRF iteration count");
    const int longest = std::max(image.width, image.height);
    if (longest <= params.working_side) {
      work_h_ = height_;
      work_w_ = width_;
    } else {
      const double s = static_cast<double>(params.working_side) / longest;
      work_h_ = std::max(1, static_cast<int>(std::lround(height_ * s)));
      work_w_ = std::max(1, static_cast<int>(std::lround(width_ * s)));
    }
    const int n = work_h_ * work_w_;

    std::array<Grid<double>, 3> channel;
    for (int ch = 0; ch < 3; ++ch) {
      Grid<double> full(height_, width_);
      for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c) full(r, c) = image.at(r, c)[ch];
      channel[static_cast<std::size_t>(ch)] = bilinear_resize<double>(full, work_h_, work_w_);
    }

    // Kernel entries for i < j, row sums, then normalization.
    Eigen::MatrixXf spatial = Eigen::MatrixXf::Zero(n, n);
    Eigen::MatrixXf bilateral = Eigen::MatrixXf::Zero(n, n);
    const double gs = 1.0 / (2.0 * params.spatial_sigma * params.spatial_sigma);
    const double bs = 1.0 / (2.0 * params.bilateral_sigma_xy * params.bilateral_sigma_xy);
    const double bc = 1.0 / (2.0 * params.bilateral_sigma_rgb * params.bilateral_sigma_rgb);
    for (int j = 0; j < n; ++j) {
      const int rj = j / work_w_, cj = j % work_w_;
      for (int i = 0; i < j; ++i) {
        const int ri = i / work_w_, ci = i % work_w_;
        const double d2 = static_cast<double>((ri - rj) * (ri - rj) + (ci - cj) * (ci - cj));
        double c2 = 0.0;
        for (const auto& g : channel) {
          const double dc = g[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(j)];
          c2 += dc * dc;
        }
        const auto ks = static_cast<float>(std::exp(-d2 * gs));
        const auto kb = static_cast<float>(std::exp(-d2 * bs - c2 * bc));
        spatial(i, j) = spatial(j, i) = ks;
        bilateral(i, j) = bilateral(j, i) = kb;
      }
    }
    const Eigen::VectorXf ds = spatial.rowwise().sum().cwiseMax(1e-20f).cwiseSqrt().cwiseInverse();
    const Eigen::VectorXf db = bilateral.rowwise().sum().cwiseMax(1e-20f).cwiseSqrt().cwiseInverse();
    kernel_ = static_cast<float>(params.spatial_weight) * (ds.asDiagonal() * spatial * ds.asDiagonal());
    kernel_ += static_cast<float>(params.bilateral_weight) * (db.asDiagonal() * bilateral * db.asDiagonal());
    row_sum_ = kernel_.rowwise().sum().cast<double>();
  }

  [[nodiscard]] int working_height() const noexcept { return work_h_; }
  [[nodiscard]] int working_width() const noexcept { return work_w_; }

  /// Mean-field inference on the working lattice; the final decision is made
  /// at full resolution from the full-resolution unary plus the upsampled
  /// pairwise message, thresholded at Q_fg > 0.5.
  [[nodiscard]] Mask refine(const SoftMask& soft, const CrfObserver& observer = {}) const {
    require(soft.height() == height_ && soft.width() == width_, ErrorCode::ShapeMismatch,
            "soft mask and image differ in size");
    const double lo = params_.probability_clamp, hi = 1.0 - params_.probability_clamp;
    auto log_odds = [&](double p) {
      p = std::clamp(p, lo, hi);
      return std::log(p) - std::log1p(-p);
    };

    const auto work = bilinear_resize<double>(soft, work_h_, work_w_);
    const auto n = static_cast<Eigen::Index>(work.size());
    Eigen::VectorXd unary(n);
    for (Eigen::Index i = 0; i < n; ++i) unary[i] = log_odds(work[static_cast<std::size_t>(i)]);

    std::vector<double> q_fg(static_cast<std::size_t>(n)), q_bg(static_cast<std::size_t>(n));
    auto set_q = [&](const Eigen::VectorXd& diff) {
      for (Eigen::Index i = 0; i < n; ++i) {
        q_fg[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-diff[i]));
        q_bg[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(diff[i]));
      }
    };
    // diff = (unary_fg + msg_fg) - (unary_bg + msg_bg); with K Q_bg = K 1 - K Q_fg
    auto pairwise = [&]() -> Eigen::VectorXd {
      const Eigen::VectorXf q = Eigen::Map<const Eigen::VectorXd>(q_fg.data(), n).cast<float>();
      const Eigen::VectorXd m = (kernel_ * q).cast<double>();
      return 2.0 * m - row_sum_;
    };

    set_q(unary);
    for (int it = 0; it < params_.iterations; ++it) {
      set_q(unary + pairwise());
      if (observer) observer(it, q_fg, q_bg);
    }

    const Eigen::VectorXd message = pairwise();
    Grid<double> msg(work_h_, work_w_);
    for (Eigen::Index i = 0; i < n; ++i) msg[static_cast<std::size_t>(i)] = message[i];
    const auto msg_full = (work_h_ == height_ && work_w_ == width_) ? msg : bilinear_resize<double>(msg, height_, width_);

    Mask out(height_, width_, 0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = log_odds(soft[i]) + msg_full[i] > 0.0 ? 1 : 0;
    return out;
  }

 private:
  CrfParams params_;
  int height_;
  int width_;
  int work_h_ = 0;
  int work_w_ = 0;
  Eigen::MatrixXf kernel_;
  Eigen::VectorXd row_sum_;
};

inline Mask crf_refine(const RgbImage& image, const SoftMask& soft, const CrfParams& params = {},
                       const CrfObserver& observer = {}) {
  return DenseCrf(image, params).refine(soft, observer);
}

}  // namespace cuts3d

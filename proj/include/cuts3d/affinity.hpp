#pragma once

// Semantic affinity graph over patches, optionally sharpened by depth.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/tensorio.hpp"

namespace cuts3d {

/// Smallest edge weight kept in any affinity graph. Keeps every node degree
/// strictly positive for the normalized eigenproblem.
inline constexpr float kEpsilonWeight = 1e-5f;

/// C x H x W patch features, channel-major like the tensor files.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  [[nodiscard]] int nodes() const noexcept { return height * width; }
  float operator()(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  float& operator()(int c, int h, int w) { return data[(static_cast<std::size_t>(c) * height + h) * width + w]; }

  static FeatureMap from_tensor(const tensorio::TensorFile& t) {
    require(t.shape.size() == 3, ErrorCode::ShapeMismatch, "feature tensors are C x H x W");
    FeatureMap f{static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2]), t.data};
    require(f.channels >= 1 && f.nodes() >= 2, ErrorCode::ShapeMismatch, "feature map needs C >= 1 and H*W >= 2");
    return f;
  }
};

/// Dense symmetric n x n graph over the H x W patch lattice; node = h * W + w.
struct AffinityMatrix {
  int height = 0;
  int width = 0;
  Eigen::MatrixXf weights;

  [[nodiscard]] int nodes() const noexcept { return static_cast<int>(weights.rows()); }
};

using DepthMap = Grid<float>;
using SpatialImportanceMap = Grid<double>;

inline AffinityMatrix cosine_affinity(const FeatureMap& f) {
  const int n = f.nodes();
  require(f.channels >= 1 && n >= 1, ErrorCode::ShapeMismatch, "empty feature map");
  require(f.data.size() == static_cast<std::size_t>(f.channels) * n, ErrorCode::ShapeMismatch,
          "feature data does not match its shape");
  // Columns are unit-normalized patch vectors.
  Eigen::MatrixXf unit(f.channels, n);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int c = 0; c < f.channels; ++c) {
      const double v = f.data[static_cast<std::size_t>(c) * n + i];
      require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite feature value");
      norm2 += v * v;
    }
    require(norm2 > 0.0, ErrorCode::ZeroVectorPatch, "patch " + std::to_string(i) + " has an all-zero feature vector");
    const double inv = 1.0 / std::sqrt(norm2);
    for (int c = 0; c < f.channels; ++c)
      unit(c, i) = static_cast<float>(f.data[static_cast<std::size_t>(c) * n + i] * inv);
  }
  AffinityMatrix w{f.height, f.width, Eigen::MatrixXf(n, n)};
  w.weights.triangularView<Eigen::Upper>() = unit.transpose() * unit;
  for (int j = 0; j < n; ++j) {
    w.weights(j, j) = 1.0f;
    for (int i = j + 1; i < n; ++i) w.weights(i, j) = std::clamp(w.weights(j, i), -1.0f, 1.0f);
    for (int i = 0; i < j; ++i) w.weights(i, j) = w.weights(j, i);
  }
  return w;
}

namespace detail {

// Half-sample symmetric reflection: (d c b a | a b c d | d c b a).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace detail

/// Separable Gaussian blur, truncated at 4 sigma, reflected borders.
inline Grid<double> gaussian_blur(const Grid<double>& in, double sigma) {
  const auto kernel = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = in.height(), w = in.width();
  Grid<double> tmp(h, w), out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * in(r, detail::reflect_index(c + k, w));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(detail::reflect_index(r + k, h), c);
      out(r, c) = acc;
    }
  return out;
}

/// |G_sigma * D - D| rescaled affinely onto [beta, 1]; a constant response maps to beta.
inline SpatialImportanceMap spatial_importance(const DepthMap& depth, double sigma, double beta) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
  require(beta >= 0.0 && beta < 1.0, ErrorCode::InvalidArgument, "beta must lie in [0, 1)");
  Grid<double> d(depth.height(), depth.width());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = depth[i];
  const auto blurred = gaussian_blur(d, sigma);
  SpatialImportanceMap delta(d.height(), d.width());
  for (std::size_t i = 0; i < d.size(); ++i) delta[i] = std::abs(blurred[i] - d[i]);
  if (delta.empty()) return delta;
  const auto [lo_it, hi_it] = std::minmax_element(delta.begin(), delta.end());
  const double lo = *lo_it, hi = *hi_it;
  for (auto& v : delta) v = hi > lo ? (1.0 - beta) * (v - lo) / (hi - lo) + beta : beta;
  return delta;
}

/// How the two endpoint importances of an edge combine into its exponent.
enum class ExponentCombine { Max, Mean, GeometricMean };

inline std::string_view to_string(ExponentCombine c) {
  switch (c) {
    case ExponentCombine::Max: return "max";
    case ExponentCombine::Mean: return "mean";
    case ExponentCombine::GeometricMean: return "geometric-mean";
  }
  return "max";
}

inline ExponentCombine parse_exponent_combine(std::string_view s) {
  if (s == "max") return ExponentCombine::Max;
  if (s == "mean") return ExponentCombine::Mean;
  if (s == "geometric-mean") return ExponentCombine::GeometricMean;
  throw Error(ErrorCode::InvalidArgument, "unknown exponent combine '" + std::string(s) + "'");
}

inline double combine_importance(double a, double b, ExponentCombine how) {
  switch (how) {
    case ExponentCombine::Max: return std::max(a, b);
    case ExponentCombine::Mean: return 0.5 * (a + b);
    case ExponentCombine::GeometricMean: return std::sqrt(a * b);
  }
  return std::max(a, b);
}

/// W'_ij = clamp(W_ij, eps, 1)^(1 - E_ij), E_ij combined from the endpoint importances.
inline void sharpen_inplace(AffinityMatrix& w, const SpatialImportanceMap& s,
                            ExponentCombine how = ExponentCombine::Max) {
  const int n = w.nodes();
  require(s.height() == w.height && s.width() == w.width && static_cast<int>(s.size()) == n,
          ErrorCode::ShapeMismatch, "importance map does not match the affinity grid");
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const float base = std::clamp(w.weights(i, j), kEpsilonWeight, 1.0f);
      const double exponent = 1.0 - combine_importance(s[i], s[j], how);
      const float v = static_cast<float>(std::exp(exponent * std::log(static_cast<double>(base))));
      w.weights(i, j) = v;
      w.weights(j, i) = v;
    }
  }
}

inline AffinityMatrix sharpen(AffinityMatrix w, const SpatialImportanceMap& s,
                              ExponentCombine how = ExponentCombine::Max) {
  sharpen_inplace(w, s, how);
  return w;
}

/// Entries >= tau become 1, the rest become kEpsilonWeight.
inline void binarize_inplace(AffinityMatrix& w, float tau) {
  require(tau > 0.0f && tau < 1.0f, ErrorCode::InvalidArgument, "tau_ncut must lie in (0, 1)");
  w.weights = w.weights.unaryExpr([tau](float v) { return v >= tau ? 1.0f : kEpsilonWeight; });
}

inline AffinityMatrix binarize(AffinityMatrix w, float tau) {
  binarize_inplace(w, tau);
  return w;
}

}  // namespace cuts3d

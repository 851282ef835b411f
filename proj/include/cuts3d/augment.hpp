#pragma once

// Training-side helpers that consume spatial confidence maps when pasting
// instances and weighting the mask loss.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "cuts3d/confidence.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/image.hpp"
#include "cuts3d/resample.hpp"

namespace cuts3d {

struct PseudoInstance {
  int instance_index = 0;
  Mask mask;  // patch grid
  SpatialConfidenceMap confidence;
  double mean_confidence = 1.0;
  BoundingBox bbox;
};

struct PseudoAnnotationSet {
  std::string image_id;
  std::vector<PseudoInstance> instances;
};

/// Instance indices ordered by mean confidence (desc), then area (desc), then
/// index (asc); the first min(count, size) are returned.
inline std::vector<int> select_confident(const PseudoAnnotationSet& set, int count) {
  require(count >= 1, ErrorCode::InvalidArgument, "count must be at least 1");
  std::vector<std::size_t> order(set.instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> area(set.instances.size());
  for (std::size_t i = 0; i < area.size(); ++i) area[i] = count_ones(set.instances[i].mask);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = set.instances[a];
    const auto& y = set.instances[b];
    if (x.mean_confidence != y.mean_confidence) return x.mean_confidence > y.mean_confidence;
    if (area[a] != area[b]) return area[a] > area[b];
    return x.instance_index < y.instance_index;
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(count)));
  std::vector<int> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(set.instances[i].instance_index);
  return out;
}

struct PasteRecord {
  std::string source_image_id;
  int instance_index = 0;
  double scale = 1.0;
  int dx = 0;
  int dy = 0;
};

struct CompositeImage {
  FloatImage image;
  std::vector<PasteRecord> provenance;
};

namespace detail {

// Copies each in-region value outward to the out-of-region cells (multi-source
// BFS, 4-connected) so bilinear upsampling does not mix in undefined values.
inline Grid<double> extend_region(const SpatialConfidenceMap& sc) {
  Grid<double> v = sc.values;
  std::vector<std::uint8_t> done(v.size(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (sc.region[i]) {
      done[i] = 1;
      queue.push_back(i);
    }
  if (queue.empty()) return Grid<double>(v.height(), v.width(), 0.0);
  const int w = v.width(), h = v.height();
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int r = static_cast<int>(i) / w, c = static_cast<int>(i) % w;
    const int nr[4] = {r - 1, r + 1, r, r};
    const int nc[4] = {c, c, c - 1, c + 1};
    for (int k = 0; k < 4; ++k) {
      if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
      const std::size_t j = v.index(nr[k], nc[k]);
      if (done[j]) continue;
      done[j] = 1;
      v[j] = v[i];
      queue.push_back(j);
    }
  }
  return v;
}

}  // namespace detail

/// Per-pixel source alpha: the instance mask (nearest-upsampled) times the
/// bilinearly upsampled confidence. Zero outside the instance.
inline Grid<double> paste_alpha(const Mask& mask, const SpatialConfidenceMap& sc, int height, int width) {
  require(sc.values.same_shape(mask) && sc.region.same_shape(mask), ErrorCode::ShapeMismatch,
          "mask and confidence map differ in shape");
  const auto m = nearest_resize(mask, height, width);
  const auto conf = bilinear_resize<double>(detail::extend_region(sc), height, width);
  Grid<double> alpha(height, width, 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = m[i] ? std::clamp(conf[i], 0.0, 1.0) : 0.0;
  return alpha;
}

/// I_aug = a * I_src + (1 - a) * I_dst over the pasted footprint. The source is
/// scaled by `scale` about its origin and shifted by (dx, dy) in the target;
/// the footprint is clipped to the target bounds.
inline CompositeImage alpha_blend_paste(const FloatImage& src, const FloatImage& dst, const Mask& mask,
                                        const SpatialConfidenceMap& sc, double scale, int dx, int dy,
                                        PasteRecord record = {}) {
  require(scale >= 0.3 && scale <= 1.0, ErrorCode::InvalidArgument, "paste scale must lie in [0.3, 1.0]");
  const auto alpha = paste_alpha(mask, sc, src.height, src.width);
  const auto support = nearest_resize(mask, src.height, src.width);

  CompositeImage out{dst, {}};
  bool any = false;
  for (int r = 0; r < dst.height; ++r) {
    const auto sr = static_cast<int>(std::floor((r - dy + 0.5) / scale));
    if (sr < 0 || sr >= src.height) continue;
    for (int c = 0; c < dst.width; ++c) {
      const auto scol = static_cast<int>(std::floor((c - dx + 0.5) / scale));
      if (scol < 0 || scol >= src.width || !support(sr, scol)) continue;
      any = true;
      const double a = alpha(sr, scol);
      const float* s = src.at(sr, scol);
      float* o = out.image.at(r, c);
      for (int ch = 0; ch < 3; ++ch) {
        // exact endpoints so a = 1 copies and a = 0 leaves the target untouched
        if (a == 1.0) o[ch] = s[ch];
        else if (a != 0.0) o[ch] = static_cast<float>(a * s[ch] + (1.0 - a) * o[ch]);
      }
    }
  }
  if (!any) throw Error(ErrorCode::DegenerateScale, "scaled instance does not cover any target pixel");
  record.scale = scale;
  record.dx = dx;
  record.dy = dy;
  out.provenance.push_back(std::move(record));
  return out;
}

struct LossResult {
  double loss = 0.0;
  Grid<double> grad;  // d loss / d pred
};

/// sum_ij w_ij BCE(pred_ij, target_ij), w = SC inside the confidence region and 1 outside.
inline LossResult soft_target_bce(const Grid<double>& pred, const Mask& target, const SpatialConfidenceMap& sc) {
  require(pred.same_shape(target) && pred.same_shape(sc.values) && pred.same_shape(sc.region),
          ErrorCode::ShapeMismatch, "prediction, target and confidence map must share a shape");
  constexpr double kLo = 1e-7, kHi = 1.0 - 1e-7;
  LossResult r{0.0, Grid<double>(pred.height(), pred.width(), 0.0)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kLo, kHi);
    const double t = target[i] ? 1.0 : 0.0;
    const double w = sc.region[i] ? sc.values[i] : 1.0;
    r.loss += w * -(t * std::log(p) + (1.0 - t) * std::log1p(-p));
    r.grad[i] = w * (p - t) / (p * (1.0 - p));
  }
  return r;
}

}  // namespace cuts3d

#pragma once

// Synthetic scenes with planted ground truth. Each object draws its features
// from its own prototype and sits on its own depth plane.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cuts3d/affinity.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/image.hpp"

namespace cuts3d::harness {

enum class Shape { Rectangle, Ellipse };

/// One planted object. Geometry is in patch units; the ramp raises depth by
/// `ramp_step` per column over `ramp_columns` columns starting at
/// `ramp_start` (relative to `left`) and keeps the raised level afterwards.
struct InstanceSpec {
  Shape shape = Shape::Rectangle;
  int top = 0;
  int left = 0;
  int height = 1;
  int width = 1;
  int prototype = 1;  // 0 is the background prototype
  double depth = 0.5;
  int ramp_start = 0;
  int ramp_columns = 0;
  double ramp_step = 0.0;
  double boundary_softness = 0.0;  // pixels of color feathering inside the boundary
  std::array<std::uint8_t, 3> color{200, 60, 60};
};

struct SceneSpec {
  std::string template_name = "custom";
  int grid = 60;        // patches per side
  int patch = 8;        // pixels per patch
  int channels = 32;
  double noise_sigma = 0.03;  // per channel; keeps cross-prototype cosines below 0.13 for all but ~0.6% of pairs
  double background_depth = 0.95;
  double background_tilt = 0.05;  // depth added from top row to bottom row
  std::array<std::uint8_t, 3> background_color{110, 120, 110};
  int pixel_noise = 6;  // uniform RGB jitter amplitude
  std::vector<InstanceSpec> instances;
};

struct SyntheticScene {
  std::string image_id;
  std::uint64_t seed = 0;
  SceneSpec spec;
  RgbImage image;
  FeatureMap features;
  DepthMap depth;             // patch resolution
  std::vector<Mask> gt_masks; // patch resolution, pairwise disjoint

  [[nodiscard]] std::vector<Mask> gt_pixel_masks() const;
};

inline constexpr std::string_view kTemplates[] = {"adjacent-twins", "single-blob", "two-blob", "ramp"};

namespace detail {

inline bool covers(const InstanceSpec& s, int r, int c) {
  if (r < s.top || r >= s.top + s.height || c < s.left || c >= s.left + s.width) return false;
  if (s.shape == Shape::Rectangle) return true;
  const double cy = s.top + s.height / 2.0, cx = s.left + s.width / 2.0;
  const double dy = (r + 0.5 - cy) / (s.height / 2.0), dx = (c + 0.5 - cx) / (s.width / 2.0);
  return dy * dy + dx * dx <= 1.0;
}

inline double instance_depth(const InstanceSpec& s, int c) {
  const int rel = c - s.left - s.ramp_start;
  if (s.ramp_columns <= 0 || rel < 0) return s.depth;
  return s.depth + s.ramp_step * std::min(rel + 1, s.ramp_columns);
}

/// Orthonormal prototypes via Gram-Schmidt on Gaussian draws.
inline std::vector<std::vector<double>> prototypes(int count, int channels, std::mt19937_64& rng) {
  require(count <= channels, ErrorCode::InvalidArgument, "more prototypes than feature channels");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<double> v(static_cast<std::size_t>(channels));
    for (auto& x : v) x = normal(rng);
    for (const auto& p : out) {
      double dot = 0.0;
      for (int i = 0; i < channels; ++i) dot += v[i] * p[i];
      for (int i = 0; i < channels; ++i) v[i] -= dot * p[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

/// Renders a scene from an explicit spec; the seed drives all noise.
inline SyntheticScene render_scene(const SceneSpec& spec, std::uint64_t seed, std::string image_id = {}) {
  require(spec.grid >= 2 && spec.patch >= 1 && spec.channels >= 2, ErrorCode::InvalidArgument, "bad scene geometry");
  const int g = spec.grid;
  Grid<int> owner(g, g, -1);
  int max_proto = 0;
  for (std::size_t k = 0; k < spec.instances.size(); ++k) {
    const auto& s = spec.instances[k];
    require(s.height >= 1 && s.width >= 1 && s.top >= 0 && s.left >= 0 && s.top + s.height <= g &&
                s.left + s.width <= g,
            ErrorCode::OverlapInfeasible, "instance " + std::to_string(k) + " does not fit the grid");
    require(s.prototype >= 1, ErrorCode::InvalidArgument, "instance prototypes start at 1");
    max_proto = std::max(max_proto, s.prototype);
    int cells = 0;
    for (int r = s.top; r < s.top + s.height; ++r)
      for (int c = s.left; c < s.left + s.width; ++c) {
        if (!detail::covers(s, r, c)) continue;
        require(owner(r, c) < 0, ErrorCode::OverlapInfeasible,
                "instances " + std::to_string(owner(r, c)) + " and " + std::to_string(k) + " overlap");
        owner(r, c) = static_cast<int>(k);
        ++cells;
      }
    require(cells > 0, ErrorCode::OverlapInfeasible, "instance " + std::to_string(k) + " covers no patch");
  }

  std::mt19937_64 rng(seed);
  SyntheticScene scene;
  scene.image_id = std::move(image_id);
  scene.seed = seed;
  scene.spec = spec;
  const auto protos = detail::prototypes(max_proto + 1, spec.channels, rng);

  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  scene.features = FeatureMap{spec.channels, g, g, std::vector<float>(static_cast<std::size_t>(spec.channels) * g * g)};
  scene.depth = DepthMap(g, g, 0.0f);
  scene.gt_masks.assign(spec.instances.size(), Mask(g, g, 0));
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      const int k = owner(r, c);
      const auto& proto = protos[static_cast<std::size_t>(k < 0 ? 0 : spec.instances[k].prototype)];
      for (int ch = 0; ch < spec.channels; ++ch)
        scene.features.data[(static_cast<std::size_t>(ch) * g + r) * g + c] = static_cast<float>(proto[ch] + noise(rng));
      if (k < 0) {
        scene.depth(r, c) = static_cast<float>(spec.background_depth + spec.background_tilt * r / std::max(1, g - 1));
      } else {
        scene.depth(r, c) = static_cast<float>(detail::instance_depth(spec.instances[k], c));
        scene.gt_masks[static_cast<std::size_t>(k)](r, c) = 1;
      }
    }

  const int side = g * spec.patch;
  scene.image = RgbImage(side, side);
  std::uniform_int_distribution<int> jitter(-spec.pixel_noise, spec.pixel_noise);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const int k = owner(y / spec.patch, x / spec.patch);
      std::array<double, 3> rgb{};
      for (int ch = 0; ch < 3; ++ch) rgb[ch] = spec.background_color[ch];
      if (k >= 0) {
        const auto& s = spec.instances[static_cast<std::size_t>(k)];
        double alpha = 1.0;
        if (s.boundary_softness > 0.0) {
          // Distance to the instance's bounding rectangle edge, in pixels.
          const double d = std::min({y - s.top * spec.patch + 0.5, (s.top + s.height) * spec.patch - y - 0.5,
                                     x - s.left * spec.patch + 0.5, (s.left + s.width) * spec.patch - x - 0.5});
          alpha = std::clamp(d / s.boundary_softness, 0.0, 1.0);
        }
        for (int ch = 0; ch < 3; ++ch) rgb[ch] = alpha * s.color[ch] + (1 - alpha) * rgb[ch];
      }
      auto* px = scene.image.at(y, x);
      for (int ch = 0; ch < 3; ++ch) px[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(rgb[ch]) + jitter(rng), 0L, 255L));
    }
  return scene;
}

inline std::vector<Mask> SyntheticScene::gt_pixel_masks() const {
  std::vector<Mask> out;
  const int side = spec.grid * spec.patch;
  for (const auto& m : gt_masks) {
    Mask p(side, side, 0);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) p(y, x) = m(y / spec.patch, x / spec.patch);
    out.push_back(std::move(p));
  }
  return out;
}

/// Random spec for a named template, deterministic in `seed`.
inline SceneSpec make_spec(std::string_view name, std::uint64_t seed, int grid = 60) {
  std::mt19937_64 rng(seed ^ 0x5eed5eed5eedULL);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  SceneSpec spec;
  spec.template_name = std::string(name);
  spec.grid = grid;
  const int margin = std::max(2, grid / 15);
  auto place = [&](int h, int w) {
    require(h + 2 * margin <= grid && w + 2 * margin <= grid, ErrorCode::OverlapInfeasible,
            "template does not fit a " + std::to_string(grid) + " patch grid");
    return std::pair{uniform(margin, grid - margin - h), uniform(margin, grid - margin - w)};
  };
  const int unit = std::max(1, grid / 4);  // typical object extent

  if (name == "adjacent-twins") {
    const int h = uniform(unit, unit + unit / 2);
    const int w1 = uniform(unit * 2 / 3, unit), w2 = uniform(unit * 2 / 3, unit);
    const auto [top, left] = place(h, w1 + w2);
    const bool near_left = uniform(0, 1) == 0;
    InstanceSpec a{Shape::Rectangle, top, left, h, w1, 1, near_left ? 0.3 : 0.7};
    InstanceSpec b{Shape::Rectangle, top, left + w1, h, w2, 1, near_left ? 0.7 : 0.3};
    a.color = {200, 60, 50};
    b.color = {50, 80, 200};
    spec.instances = {a, b};
  } else if (name == "single-blob") {
    const int h = uniform(unit, 2 * unit), w = uniform(unit, 2 * unit);
    const auto [top, left] = place(h, w);
    InstanceSpec a{uniform(0, 1) ? Shape::Ellipse : Shape::Rectangle, top, left, h, w, 1, 0.4};
    spec.instances = {a};
  } else if (name == "two-blob") {
    // Side by side with a gap, distinct prototypes and depths.
    const int h1 = uniform(unit, unit + unit / 2), h2 = uniform(unit, unit + unit / 2);
    const int w1 = uniform(unit * 2 / 3, unit), w2 = uniform(unit * 2 / 3, unit);
    const int gap = std::max(2, unit / 3);
    const auto [top, left] = place(std::max(h1, h2), w1 + gap + w2);
    InstanceSpec a{Shape::Rectangle, top, left, h1, w1, 1, 0.35};
    InstanceSpec b{Shape::Rectangle, top, left + w1 + gap, h2, w2, 2, 0.6};
    a.color = {210, 170, 40};
    b.color = {40, 170, 90};
    spec.instances = {a, b};
  } else if (name == "ramp") {
    // One object whose depth climbs in steps slightly longer than the
    // smallest sweep threshold, so low thresholds split it and high ones do not.
    const int h = uniform(unit, unit + unit / 2);
    const int w = uniform(unit + unit / 2, 2 * unit);
    const auto [top, left] = place(h, w);
    InstanceSpec a{Shape::Rectangle, top, left, h, w, 1, 0.3};
    a.ramp_columns = 4;
    a.ramp_start = w / 2 - 2;
    a.ramp_step = 0.05;
    spec.instances = {a};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scene template '" + std::string(name) + "'");
  }
  return spec;
}

inline SyntheticScene generate_scene(std::uint64_t seed, std::string_view template_name, int grid = 60,
                                     std::string image_id = {}) {
  return render_scene(make_spec(template_name, seed, grid), seed, std::move(image_id));
}

}  // namespace cuts3d::harness

#pragma once

// Per-image extraction (affinity -> ncut -> localcut -> confidence -> crf) and
// the batch runner that turns a manifest into annotation files.

#include <algorithm>
#include <cmath>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cuts3d/affinity.hpp"
#include "cuts3d/annotation.hpp"
#include "cuts3d/augment.hpp"
#include "cuts3d/confidence.hpp"
#include "cuts3d/config.hpp"
#include "cuts3d/image.hpp"
#include "cuts3d/localcut.hpp"
#include "cuts3d/ncut.hpp"
#include "cuts3d/refine.hpp"
#include "cuts3d/resample.hpp"
#include "cuts3d/rle.hpp"
#include "cuts3d/tensorio.hpp"

namespace cuts3d {

struct ExtractedInstance {
  PseudoInstance instance;  // patch mask, clamped confidence, pixel bbox
  Mask pixel_mask;
  bool seed_conflict = false;
};

struct ImageExtraction {
  std::string image_id;
  std::vector<ExtractedInstance> instances;
  StopReason stop = StopReason::IterationsExhausted;

  [[nodiscard]] PseudoAnnotationSet annotation_set() const {
    PseudoAnnotationSet s{image_id, {}};
    for (const auto& e : instances) s.instances.push_back(e.instance);
    return s;
  }
};

namespace detail {

inline SpatialConfidenceMap unit_confidence(const Mask& m) {
  SpatialConfidenceMap sc{Grid<double>(m.height(), m.width(), 0.0), Mask(m.height(), m.width(), 0)};
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) {
      sc.values[i] = 1.0;
      sc.region[i] = 1;
    }
  return sc;
}

}  // namespace detail

/// Runs the full extraction for one image. `image` may be empty, in which
/// case pixel masks are rendered at `image_size` (or at the patch grid when
/// that is 0) and CRF refinement is skipped.
inline ImageExtraction process_image(const FeatureMap& features, const DepthMap& depth, const RgbImage& image,
                                     const PipelineConfig& cfg, std::string image_id = {}) {
  cfg.validate();
  const int gh = features.height, gw = features.width;
  require(gh * gw >= 2, ErrorCode::ShapeMismatch, "feature grid needs at least two patches");
  const bool has_image = image.width > 0 && image.height > 0;
  if (has_image && cfg.image_size > 0) {
    require(image.width == cfg.image_size && image.height == cfg.image_size, ErrorCode::ShapeMismatch,
            "image is " + std::to_string(image.width) + "x" + std::to_string(image.height) + ", expected " +
                std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size));
  }
  for (float v : depth) require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite depth value");
  const DepthMap grid_depth = resize_depth(depth, gh, gw);

  AffinityMatrix w = cosine_affinity(features);
  if (cfg.sharpening) sharpen_inplace(w, spatial_importance(grid_depth, cfg.sigma_gauss, cfg.beta), cfg.exponent_combine);
  binarize_inplace(w, static_cast<float>(cfg.tau_ncut));

  ImageExtraction out;
  out.image_id = std::move(image_id);
  std::vector<ExtractedInstance> found;
  const auto lc_opt = cfg.local_cut_options();

  auto refine = [&](const Bipartition& b, const EigenSolution& e) {
    ExtractedInstance inst;
    Mask mask(gh, gw, 0);
    SpatialConfidenceMap sc;
    if (!cfg.localcut) {
      for (int id : b.foreground) mask[static_cast<std::size_t>(id)] = 1;
      sc = detail::unit_confidence(mask);
    } else if (cfg.confidence) {
      auto r = confidence_sweep(b, e, grid_depth, gh, gw, lc_opt, cfg.T, cfg.tau_knn_min, cfg.tau_knn);
      mask = std::move(r.mask);
      sc = clamp_confidence(std::move(r.confidence), cfg.sc_min);
      inst.seed_conflict = r.seed_conflict;
    } else {
      auto r = local_cut(b, e, grid_depth, gh, gw, lc_opt);
      mask = std::move(r.mask);
      sc = detail::unit_confidence(mask);
      inst.seed_conflict = r.seed_conflict;
    }
    std::vector<int> nodes;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) nodes.push_back(static_cast<int>(i));
    if (nodes.empty()) return nodes;  // nothing survived the cut; the loop drops the foreground
    inst.instance.mean_confidence = mean_confidence(sc, mask);
    inst.instance.mask = std::move(mask);
    inst.instance.confidence = std::move(sc);
    found.push_back(std::move(inst));
    return nodes;
  };
  out.stop = cut_loop(w, cfg.cut_loop_options(), refine).stop;
  w = {};  // release the n x n graph before the CRF allocates its kernel

  const int ph = has_image ? image.height : (cfg.image_size > 0 ? cfg.image_size : gh);
  const int pw = has_image ? image.width : (cfg.image_size > 0 ? cfg.image_size : gw);
  std::optional<DenseCrf> crf;
  if (cfg.crf && has_image && !found.empty()) crf.emplace(image, cfg.crf_params);

  Mask claimed(ph, pw, 0);
  for (auto& inst : found) {
    Mask pix = crf ? crf->refine(upsample_mask(inst.instance.mask, ph, pw))
                   : nearest_resize(inst.instance.mask, ph, pw);
    for (std::size_t i = 0; i < pix.size(); ++i) {
      if (claimed[i]) pix[i] = 0;
      claimed[i] |= pix[i];
    }
    if (count_ones(pix) == 0) continue;
    inst.instance.instance_index = static_cast<int>(out.instances.size());
    inst.instance.bbox = bounding_box(pix);
    inst.pixel_mask = std::move(pix);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path image;
  std::filesystem::path features;
  std::filesystem::path depth;
};

/// JSON Lines of {"image", "features", "depth"[, "image_id"]}; relative paths
/// resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), ErrorCode::ManifestMissing, "manifest not found: " + path.string());
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ManifestMissing, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.image = resolve(j.at("image").get<std::string>());
      e.features = resolve(j.at("features").get<std::string>());
      e.depth = resolve(j.at("depth").get<std::string>());
      e.image_id = j.contains("image_id") ? j["image_id"].get<std::string>() : e.image.stem().string();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::MalformedHeader,
                  path.string() + ":" + std::to_string(lineno) + ": bad manifest entry: " + ex.what());
    }
  }
  return out;
}

inline void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot write " + path.string());
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base).generic_string(); };
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["image_id"] = e.image_id;
    j["image"] = rel(e.image);
    j["features"] = rel(e.features);
    j["depth"] = rel(e.depth);
    out << j.dump() << '\n';
  }
}

struct BatchSummary {
  int images = 0;
  int masks = 0;
  int failures = 0;
  double wall_time_s = 0.0;
  std::vector<std::pair<std::string, std::string>> failed;  // (image_id, reason)
};

inline RgbImage render_overlay(const RgbImage& image, const std::vector<ExtractedInstance>& instances) {
  static constexpr std::uint8_t kPalette[][3] = {{230, 25, 75}, {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
                                                 {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230}};
  RgbImage out = image;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& color = kPalette[k % std::size(kPalette)];
    const auto& m = instances[k].pixel_mask;
    for (int r = 0; r < out.height && r < m.height(); ++r)
      for (int c = 0; c < out.width && c < m.width(); ++c) {
        if (!m(r, c)) continue;
        auto* px = out.at(r, c);
        for (int ch = 0; ch < 3; ++ch) px[ch] = static_cast<std::uint8_t>((px[ch] + color[ch]) / 2);
      }
  }
  return out;
}

/// Processes every entry with `cfg.worker_count` threads. Outputs under
/// `out_dir`: annotations.jsonl (ordered by image_id), confidence/*.npy,
/// overlays/*.png (optional), config.txt and summary.json.
inline BatchSummary run_batch(const std::vector<ManifestEntry>& entries, const PipelineConfig& cfg,
                              const std::filesystem::path& out_dir, bool overlays = false,
                              std::ostream* log = &std::cerr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "confidence");
  if (overlays) fs::create_directories(out_dir / "overlays");

  struct Slot {
    std::vector<AnnotationRecord> records;
    std::optional<std::string> failure;
  };
  std::vector<Slot> slots(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const auto& e = entries[i];
      try {
        const auto features = FeatureMap::from_tensor(tensorio::read_tensor(e.features));
        const auto depth_t = tensorio::read_tensor(e.depth);
        require(depth_t.shape.size() == 2, ErrorCode::ShapeMismatch, "depth tensors are H x W");
        const auto image = read_png(e.image);
        const auto result = process_image(features, tensorio::to_grid(depth_t), image, cfg, e.image_id);
        for (const auto& inst : result.instances) {
          const auto& pi = inst.instance;
          const std::string rel = "confidence/" + e.image_id + "_" + std::to_string(pi.instance_index) + ".npy";
          Grid<float> conf(pi.confidence.values.height(), pi.confidence.values.width(), 0.0f);
          for (std::size_t q = 0; q < conf.size(); ++q)
            if (pi.confidence.region[q]) conf[q] = static_cast<float>(pi.confidence.values[q]);
          tensorio::write_tensor(tensorio::from_grid(conf), out_dir / rel);
          slots[i].records.push_back(
              {e.image_id, pi.instance_index, rle::encode(inst.pixel_mask), pi.bbox, pi.mean_confidence, rel});
        }
        if (overlays) write_png(render_overlay(image, result.instances), out_dir / "overlays" / (e.image_id + ".png"));
      } catch (const std::exception& ex) {
        slots[i].failure = ex.what();
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << "[extract] " << e.image_id << ": " << ex.what() << '\n';
        }
      }
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.worker_count, static_cast<int>(std::max<std::size_t>(1, entries.size()))));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entries[a].image_id < entries[b].image_id; });

  BatchSummary summary;
  summary.images = static_cast<int>(entries.size());
  std::vector<AnnotationRecord> all;
  for (auto i : order) {
    if (slots[i].failure) {
      ++summary.failures;
      summary.failed.emplace_back(entries[i].image_id, *slots[i].failure);
      continue;
    }
    summary.masks += static_cast<int>(slots[i].records.size());
    for (auto& r : slots[i].records) all.push_back(std::move(r));
  }
  write_annotations(all, out_dir / "annotations.jsonl");
  tensorio::write_file(out_dir / "config.txt", to_text(cfg));
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::ordered_json j;
  j["images"] = summary.images;
  j["masks"] = summary.masks;
  j["failures"] = summary.failures;
  j["wall_time_s"] = summary.wall_time_s;
  j["failed"] = nlohmann::ordered_json::array();
  for (const auto& [id, why] : summary.failed) j["failed"].push_back({{"image_id", id}, {"reason", why}});
  j["config"] = to_json(cfg);
  tensorio::write_file(out_dir / "summary.json", j.dump(2) + "\n");
  return summary;
}

}  // namespace cuts3d

#pragma once

// On-disk synthetic corpora: images/, features/, depth/, manifest.jsonl and
// gt.jsonl (pixel-resolution RLE ground truth).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cuts3d/harness/evaluate.hpp"
#include "cuts3d/harness/scene.hpp"
#include "cuts3d/image.hpp"
#include "cuts3d/pipeline.hpp"
#include "cuts3d/rle.hpp"
#include "cuts3d/tensorio.hpp"

namespace cuts3d::harness {

inline std::uint64_t scene_seed(std::uint64_t corpus_seed, std::size_t index) {
  std::uint64_t z = corpus_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string scene_id(std::size_t index) {
  std::ostringstream s;
  s << "scene_" << std::setw(4) << std::setfill('0') << index;
  return s.str();
}

/// `templates` is cycled over the scenes; an empty list cycles all templates.
inline std::vector<SyntheticScene> generate_corpus(std::size_t count, std::uint64_t seed,
                                                   std::vector<std::string> templates = {"adjacent-twins"},
                                                   int grid = 60) {
  if (templates.empty()) templates.assign(std::begin(kTemplates), std::end(kTemplates));
  std::vector<SyntheticScene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(generate_scene(scene_seed(seed, i), templates[i % templates.size()], grid, scene_id(i)));
  return out;
}

inline std::vector<ManifestEntry> write_corpus(const std::vector<SyntheticScene>& scenes,
                                               const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"images", "features", "depth"}) fs::create_directories(dir / sub);
  std::vector<ManifestEntry> entries;
  std::ofstream gt(dir / "gt.jsonl", std::ios::trunc);
  require(static_cast<bool>(gt), ErrorCode::IoFailure, "cannot write " + (dir / "gt.jsonl").string());
  for (const auto& s : scenes) {
    ManifestEntry e{s.image_id, dir / "images" / (s.image_id + ".png"), dir / "features" / (s.image_id + ".npy"),
                    dir / "depth" / (s.image_id + ".npy")};
    write_png(s.image, e.image);
    tensorio::write_tensor(
        {{static_cast<std::size_t>(s.features.channels), static_cast<std::size_t>(s.features.height),
          static_cast<std::size_t>(s.features.width)},
         s.features.data},
        e.features);
    tensorio::write_tensor(tensorio::from_grid(s.depth), e.depth);
    entries.push_back(e);

    nlohmann::ordered_json j;
    j["image_id"] = s.image_id;
    j["template"] = s.spec.template_name;
    j["seed"] = s.seed;
    j["masks"] = nlohmann::ordered_json::array();
    for (const auto& m : s.gt_pixel_masks()) {
      const auto r = rle::encode(m);
      j["masks"].push_back({{"size", {r.height, r.width}}, {"counts", r.counts}});
    }
    gt << j.dump() << '\n';
  }
  write_manifest(entries, dir / "manifest.jsonl");
  return entries;
}

inline std::vector<ImageGroundTruth> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ManifestMissing, "cannot open ground truth " + path.string());
  std::vector<ImageGroundTruth> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ImageGroundTruth g{j.at("image_id").get<std::string>(), {}};
      for (const auto& m : j.at("masks")) {
        rle::RleMask r{m.at("size").at(0).get<int>(), m.at("size").at(1).get<int>(),
                       m.at("counts").get<std::vector<std::uint32_t>>()};
        g.masks.push_back(rle::decode(r));
      }
      out.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ": bad ground-truth record: " + e.what());
    }
  }
  return out;
}

inline std::vector<ImageGroundTruth> ground_truth(const std::vector<SyntheticScene>& scenes) {
  std::vector<ImageGroundTruth> out;
  for (const auto& s : scenes) out.push_back({s.image_id, s.gt_pixel_masks()});
  return out;
}

/// Pixel-resolution predictions straight from in-memory extraction results.
inline ImagePredictions predictions_from_extraction(const ImageExtraction& x) {
  ImagePredictions p{x.image_id, {}};
  for (const auto& inst : x.instances) p.masks.push_back({inst.pixel_mask, inst.instance.mean_confidence});
  return p;
}

}  // namespace cuts3d::harness

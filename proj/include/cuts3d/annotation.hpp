#pragma once

// Annotation records, one JSON object per line.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/rle.hpp"

namespace cuts3d {

struct AnnotationRecord {
  std::string image_id;
  int instance_index = 0;
  rle::RleMask mask;
  BoundingBox bbox;
  double mean_confidence = 1.0;
  std::string confidence_map_path;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

inline nlohmann::ordered_json to_json(const AnnotationRecord& a) {
  nlohmann::ordered_json j;
  j["image_id"] = a.image_id;
  j["instance_index"] = a.instance_index;
  j["mask"] = {{"size", {a.mask.height, a.mask.width}}, {"counts", a.mask.counts}};
  j["bbox"] = {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h};
  j["mean_confidence"] = a.mean_confidence;
  j["confidence_map_path"] = a.confidence_map_path;
  return j;
}

inline AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  try {
    AnnotationRecord a;
    a.image_id = j.at("image_id").get<std::string>();
    a.instance_index = j.at("instance_index").get<int>();
    const auto& m = j.at("mask");
    a.mask.height = m.at("size").at(0).get<int>();
    a.mask.width = m.at("size").at(1).get<int>();
    a.mask.counts = m.at("counts").get<std::vector<std::uint32_t>>();
    const auto& b = j.at("bbox");
    a.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    a.mean_confidence = j.at("mean_confidence").get<double>();
    a.confidence_map_path = j.value("confidence_map_path", std::string{});
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("bad annotation record: ") + e.what());
  }
}

inline void write_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  require(static_cast<bool>(out), ErrorCode::IoFailure, "short write to " + path.string());
}

inline std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
    }
    out.push_back(annotation_from_json(j));
  }
  return out;
}

}  // namespace cuts3d

#pragma once

// Greedy IoU matching and 101-point interpolated average precision over
// instance masks.

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cuts3d/annotation.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/rle.hpp"

namespace cuts3d::harness {

struct ScoredMask {
  Mask mask;
  double score = 1.0;
};

struct ImagePredictions {
  std::string image_id;
  std::vector<ScoredMask> masks;
};

struct ImageGroundTruth {
  std::string image_id;
  std::vector<Mask> masks;
};

struct ImageMatch {
  std::string image_id;
  std::vector<int> matched_gt;  // per prediction (input order): GT index or -1, at IoU 0.5
  std::vector<double> best_iou; // per GT: best IoU over all predictions
};

struct EvalResult {
  double ap50 = 0.0;
  double ap_mean = 0.0;         // mean over IoU 0.50:0.05:0.95
  std::vector<double> ap_per_threshold;
  std::vector<ImageMatch> images;
};

inline std::vector<double> iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

namespace detail {

struct Detection {
  double score;
  std::size_t image;
  std::size_t index;
};

/// Greedy matching of one image's predictions (visited by descending score)
/// against its GT at IoU >= thr; returns per-prediction hit flags.
inline std::vector<int> greedy_match(const std::vector<std::size_t>& order, const std::vector<std::vector<double>>& iou,
                                     std::size_t gt_count, double thr) {
  std::vector<int> match(iou.size(), -1);
  std::vector<std::uint8_t> taken(gt_count, 0);
  for (std::size_t p : order) {
    int best = -1;
    double best_iou = thr;
    for (std::size_t g = 0; g < gt_count; ++g) {
      if (taken[g] || iou[p][g] < best_iou) continue;
      if (best >= 0 && iou[p][g] == best_iou) continue;
      best = static_cast<int>(g);
      best_iou = iou[p][g];
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = 1;
      match[p] = best;
    }
  }
  return match;
}

/// 101-point interpolated AP from detections sorted by descending score.
inline double interpolated_ap(const std::vector<std::uint8_t>& hits, std::size_t gt_total) {
  if (gt_total == 0) return hits.empty() ? 1.0 : 0.0;
  std::vector<double> precision(hits.size()), recall(hits.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i];
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_total);
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

}  // namespace detail

/// Predictions are matched to ground truth by image_id; every prediction
/// image must have ground truth (IdMismatch otherwise). Ground-truth images
/// without predictions count as misses.
inline EvalResult evaluate(const std::vector<ImagePredictions>& preds, const std::vector<ImageGroundTruth>& gts) {
  std::map<std::string, std::size_t> gt_index;
  for (std::size_t i = 0; i < gts.size(); ++i)
    require(gt_index.emplace(gts[i].image_id, i).second, ErrorCode::IdMismatch,
            "duplicate ground-truth image_id '" + gts[i].image_id + "'");
  std::vector<const ImagePredictions*> by_gt(gts.size(), nullptr);
  for (const auto& p : preds) {
    const auto it = gt_index.find(p.image_id);
    require(it != gt_index.end(), ErrorCode::IdMismatch, "no ground truth for image_id '" + p.image_id + "'");
    require(by_gt[it->second] == nullptr, ErrorCode::IdMismatch, "duplicate prediction image_id '" + p.image_id + "'");
    by_gt[it->second] = &p;
  }

  std::size_t gt_total = 0;
  std::vector<std::vector<std::vector<double>>> ious(gts.size());
  std::vector<std::vector<std::size_t>> orders(gts.size());
  std::vector<detail::Detection> dets;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gt_total += gts[i].masks.size();
    if (!by_gt[i]) continue;
    const auto& pm = by_gt[i]->masks;
    for (std::size_t p = 0; p < pm.size(); ++p) {
      std::vector<double> row;
      for (const auto& g : gts[i].masks) {
        require(g.same_shape(pm[p].mask), ErrorCode::ShapeMismatch,
                "prediction and ground truth differ in shape for '" + gts[i].image_id + "'");
        row.push_back(mask_iou(pm[p].mask, g));
      }
      ious[i].push_back(std::move(row));
      dets.push_back({pm[p].score, i, p});
    }
    auto& order = orders[i];
    order.resize(pm.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pm[a].score > pm[b].score; });
  }
  std::stable_sort(dets.begin(), dets.end(), [](const detail::Detection& a, const detail::Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });

  EvalResult result;
  for (double thr : iou_thresholds()) {
    std::vector<std::vector<int>> matches(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i)
      matches[i] = detail::greedy_match(orders[i], ious[i], gts[i].masks.size(), thr);
    std::vector<std::uint8_t> hits;
    for (const auto& d : dets) hits.push_back(matches[d.image][d.index] >= 0 ? 1 : 0);
    result.ap_per_threshold.push_back(detail::interpolated_ap(hits, gt_total));
    if (thr == 0.5) {
      for (std::size_t i = 0; i < gts.size(); ++i) {
        ImageMatch m{gts[i].image_id, matches[i], std::vector<double>(gts[i].masks.size(), 0.0)};
        for (const auto& row : ious[i])
          for (std::size_t g = 0; g < row.size(); ++g) m.best_iou[g] = std::max(m.best_iou[g], row[g]);
        result.images.push_back(std::move(m));
      }
    }
  }
  result.ap50 = result.ap_per_threshold.front();
  result.ap_mean = std::accumulate(result.ap_per_threshold.begin(), result.ap_per_threshold.end(), 0.0) /
                   static_cast<double>(result.ap_per_threshold.size());
  return result;
}

/// Groups annotation records by image_id (decoding RLE masks).
inline std::vector<ImagePredictions> predictions_from_records(const std::vector<AnnotationRecord>& records) {
  std::vector<ImagePredictions> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.emplace(r.image_id, out.size());
    if (inserted) out.push_back({r.image_id, {}});
    out[it->second].masks.push_back({rle::decode(r.mask), r.mean_confidence});
  }
  return out;
}

}  // namespace cuts3d::harness

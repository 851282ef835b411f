#pragma once

// Spatial confidence: agreement of local cuts across a sweep of k-NN thresholds.

#include <algorithm>
#include <vector>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/localcut.hpp"

namespace cuts3d {

/// Per-patch confidence. Only meaningful where `region` is set.
struct SpatialConfidenceMap {
  Grid<double> values;
  Mask region;
};

struct ConfidenceResult {
  Mask mask;                        // the cut at tau_max
  SpatialConfidenceMap confidence;  // unclamped
  Grid<int> votes;                  // number of cuts containing each patch
  int steps = 0;
  bool seed_conflict = false;
};

/// Thresholds tau_min + t (tau_max - tau_min) / (T - 1), t = 0..T-1, both ends exact.
inline std::vector<double> sweep_thresholds(int steps, double tau_min, double tau_max) {
  require(steps >= 2, ErrorCode::InvalidArgument, "a confidence sweep needs at least two steps");
  require(tau_min > 0.0 && tau_min < tau_max, ErrorCode::InvalidArgument, "need 0 < tau_min < tau_max");
  std::vector<double> taus(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) taus[static_cast<std::size_t>(t)] = tau_min + t * (tau_max - tau_min) / (steps - 1);
  taus.back() = tau_max;
  return taus;
}

inline ConfidenceResult confidence_sweep(const Bipartition& b, const EigenSolution& e, const DepthMap& depth,
                                         int grid_height, int grid_width, const LocalCutOptions& opt, int steps,
                                         double tau_min, double tau_max) {
  const auto taus = sweep_thresholds(steps, tau_min, tau_max);
  const LocalCutProblem problem(b, e, depth, grid_height, grid_width, opt);

  ConfidenceResult r;
  r.steps = steps;
  r.votes = Grid<int>(grid_height, grid_width, 0);
  r.confidence.values = Grid<double>(grid_height, grid_width, 0.0);
  r.confidence.region = Mask(grid_height, grid_width, 0);

  if (problem.seed_conflict()) {
    r.seed_conflict = true;
    r.mask = problem.cut(tau_max, opt.capacity).mask;
    for (std::size_t i = 0; i < r.mask.size(); ++i) {
      if (!r.mask[i]) continue;
      r.votes[i] = steps;
      r.confidence.values[i] = 1.0;
      r.confidence.region[i] = 1;
    }
    return r;
  }

  for (std::size_t t = 0; t < taus.size(); ++t) {
    auto cut = problem.cut(taus[t], opt.capacity);
    for (std::size_t i = 0; i < cut.mask.size(); ++i) r.votes[i] += cut.mask[i] ? 1 : 0;
    if (t + 1 == taus.size()) r.mask = std::move(cut.mask);
  }
  for (std::size_t i = 0; i < r.votes.size(); ++i) {
    if (r.votes[i] == 0) continue;
    r.confidence.region[i] = 1;
    r.confidence.values[i] = static_cast<double>(r.votes[i]) / steps;
  }
  return r;
}

inline SpatialConfidenceMap clamp_confidence(SpatialConfidenceMap sc, double sc_min) {
  require(sc_min >= 0.0 && sc_min <= 1.0, ErrorCode::InvalidArgument, "sc_min must lie in [0, 1]");
  for (std::size_t i = 0; i < sc.values.size(); ++i)
    if (sc.region[i]) sc.values[i] = std::max(sc.values[i], sc_min);
  return sc;
}

inline double mean_confidence(const SpatialConfidenceMap& sc, const Mask& m) {
  require(sc.values.same_shape(m), ErrorCode::ShapeMismatch, "confidence map and mask differ in shape");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    sum += sc.values[i];
    ++n;
  }
  require(n > 0, ErrorCode::EmptyMask, "mean confidence of an empty mask");
  return sum / static_cast<double>(n);
}

}  // namespace cuts3d

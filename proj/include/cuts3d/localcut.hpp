#pragma once

// 3-D refinement of a semantic bipartition. The patch depth map becomes a
// point cloud whose k-NN graph is cut between the eigenvector extremes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cuts3d/affinity.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/maxflow.hpp"
#include "cuts3d/ncut.hpp"
#include "cuts3d/resample.hpp"

namespace cuts3d {

/// Bilinear, half-pixel centers; identity when the size already matches.
inline DepthMap resize_depth(const DepthMap& d, int height, int width) {
  if (d.height() == height && d.width() == width) return d;
  return bilinear_resize<float>(d, height, width);
}

struct Point3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

struct PointCloud {
  int height = 0;
  int width = 0;
  std::vector<Point3> points;  // node h * W + w
};

inline PointCloud unproject(const DepthMap& d) {
  PointCloud p{d.height(), d.width(), {}};
  const double scale = std::max(d.height(), d.width());
  p.points.reserve(d.size());
  for (int h = 0; h < d.height(); ++h)
    for (int w = 0; w < d.width(); ++w) p.points.push_back({(w + 0.5) / scale, (h + 0.5) / scale, d(h, w)});
  return p;
}

/// Points outside `foreground` are pushed to depth z_bg.
inline PointCloud flatten_background(PointCloud p, std::span<const int> foreground, double z_bg) {
  std::vector<std::uint8_t> inside(p.points.size(), 0);
  for (int id : foreground) {
    require(id >= 0 && static_cast<std::size_t>(id) < p.points.size(), ErrorCode::ShapeMismatch,
            "foreground node outside the point cloud");
    inside[static_cast<std::size_t>(id)] = 1;
  }
  for (std::size_t i = 0; i < p.points.size(); ++i)
    if (!inside[i]) p.points[i].z = z_bg;
  return p;
}

enum class CapacityFn { Gaussian, Inverse, LinearComplement };

inline std::string_view to_string(CapacityFn c) {
  switch (c) {
    case CapacityFn::Gaussian: return "gaussian";
    case CapacityFn::Inverse: return "inverse";
    case CapacityFn::LinearComplement: return "linear-complement";
  }
  return "gaussian";
}

inline CapacityFn parse_capacity_fn(std::string_view s) {
  if (s == "gaussian") return CapacityFn::Gaussian;
  if (s == "inverse") return CapacityFn::Inverse;
  if (s == "linear-complement") return CapacityFn::LinearComplement;
  throw Error(ErrorCode::InvalidArgument, "unknown capacity function '" + std::string(s) + "'");
}

/// Edge capacity as a decreasing function of length; dist <= tau is assumed.
inline double edge_capacity(double dist, double tau, CapacityFn fn) {
  const double r = dist / tau;
  switch (fn) {
    case CapacityFn::Gaussian: return std::exp(-r * r);
    case CapacityFn::Inverse: return 1.0 / (r + 1e-3);
    case CapacityFn::LinearComplement: return std::max(0.0, 1.0 - r);
  }
  return std::exp(-r * r);
}

struct SpatialGraph {
  struct Arc {
    int from;
    int to;
    double capacity;
  };
  int nodes = 0;
  std::vector<Arc> arcs;
  int source = -1;
  int sink = -1;
};

struct KnnEdge {
  int u;  // u < v
  int v;
  double length;
};

/// Symmetrized k-NN edge set (v in kNN(u) or u in kNN(v)), sorted by (u, v).
/// Neighbor ties are broken by lower index.
inline std::vector<KnnEdge> knn_edges(const PointCloud& p, int k) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");
  const int n = static_cast<int>(p.points.size());
  std::vector<KnnEdge> edges;
  edges.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  std::vector<std::pair<double, int>> cand(static_cast<std::size_t>(std::max(0, n - 1)));
  const int kk = std::min(k, n - 1);
  for (int i = 0; i < n && kk > 0; ++i) {
    std::size_t m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) cand[m++] = {distance(p.points[i], p.points[j]), j};
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.begin() + static_cast<std::ptrdiff_t>(m));
    for (int q = 0; q < kk; ++q) {
      const int j = cand[static_cast<std::size_t>(q)].second;
      edges.push_back({std::min(i, j), std::max(i, j), cand[static_cast<std::size_t>(q)].first});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const KnnEdge& a, const KnnEdge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const KnnEdge& a, const KnnEdge& b) { return a.u == b.u && a.v == b.v; }),
              edges.end());
  return edges;
}

inline SpatialGraph threshold_edges(int nodes, const std::vector<KnnEdge>& edges, double tau, CapacityFn fn) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau_knn must be positive");
  SpatialGraph g;
  g.nodes = nodes;
  for (const auto& e : edges) {
    if (e.length > tau) continue;
    const double c = edge_capacity(e.length, tau, fn);
    g.arcs.push_back({e.u, e.v, c});
    g.arcs.push_back({e.v, e.u, c});
  }
  return g;
}

inline SpatialGraph knn_graph(const PointCloud& p, int k, double tau, CapacityFn fn = CapacityFn::Gaussian) {
  return threshold_edges(static_cast<int>(p.points.size()), knn_edges(p, k), tau, fn);
}

struct CutResult {
  std::vector<int> source_side;  // ascending
  double cut_value = 0.0;        // capacity of arcs leaving source_side
  double flow_value = 0.0;
  std::vector<int> saturated_arcs;  // indices into SpatialGraph::arcs crossing the cut
};

inline CutResult dinic_mincut(const SpatialGraph& g) {
  require(g.source >= 0 && g.sink >= 0 && g.source < g.nodes && g.sink < g.nodes && g.source != g.sink,
          ErrorCode::InvalidArgument, "source and sink must be set and distinct");
  Dinic<double> flow(g.nodes);
  for (const auto& a : g.arcs) flow.add_edge(a.from, a.to, a.capacity);
  CutResult r;
  r.flow_value = flow.max_flow(g.source, g.sink);
  const auto side = flow.source_side();
  for (int i = 0; i < g.nodes; ++i)
    if (side[static_cast<std::size_t>(i)]) r.source_side.push_back(i);
  for (std::size_t i = 0; i < g.arcs.size(); ++i) {
    const auto& a = g.arcs[i];
    if (side[static_cast<std::size_t>(a.from)] && !side[static_cast<std::size_t>(a.to)]) {
      r.cut_value += a.capacity;
      r.saturated_arcs.push_back(static_cast<int>(i));
    }
  }
  return r;
}

struct LocalCutOptions {
  int k = 8;
  double tau_knn = 0.115;
  double z_bg = 2.0;
  CapacityFn capacity = CapacityFn::Gaussian;
};

struct LocalCutResult {
  Mask mask;                   // patch grid
  bool seed_conflict = false;  // mask is the semantic foreground, unchanged
  int source = -1;
  int sink = -1;
  double cut_value = 0.0;
  double flow_value = 0.0;
};

/// Everything about a local cut that does not depend on tau_knn, so a sweep
/// over thresholds builds the point cloud and neighbor lists once.
class LocalCutProblem {
 public:
  LocalCutProblem(const Bipartition& b, const EigenSolution& e, const DepthMap& depth, int grid_height,
                  int grid_width, const LocalCutOptions& opt)
      : height_(grid_height), width_(grid_width) {
    const int n = grid_height * grid_width;
    in_b_.assign(static_cast<std::size_t>(n), 0);
    for (int id : b.foreground) {
      require(id >= 0 && id < n, ErrorCode::ShapeMismatch, "bipartition node outside the grid");
      in_b_[static_cast<std::size_t>(id)] = 1;
    }
    if (b.foreground.empty()) {
      seed_conflict_ = true;
      return;
    }
    source_ = b.seed_max;
    sink_ = b.seed_min;
    if (sink_ >= 0 && sink_ < n && in_b_[static_cast<std::size_t>(sink_)]) {
      // re-pick the sink as the smallest-|x| active node outside B
      sink_ = -1;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < e.node_ids.size(); ++i) {
        const int id = e.node_ids[i];
        const double a = std::abs(e.vector[static_cast<Eigen::Index>(i)]);
        if (!in_b_[static_cast<std::size_t>(id)] && a < best) {
          best = a;
          sink_ = id;
        }
      }
    }
    if (source_ < 0 || source_ >= n || !in_b_[static_cast<std::size_t>(source_)] || sink_ < 0 || sink_ >= n ||
        sink_ == source_) {
      seed_conflict_ = true;
      return;
    }
    const DepthMap d = resize_depth(depth, grid_height, grid_width);
    cloud_ = flatten_background(unproject(d), b.foreground, opt.z_bg);
    edges_ = knn_edges(cloud_, opt.k);
  }

  [[nodiscard]] bool seed_conflict() const noexcept { return seed_conflict_; }
  [[nodiscard]] const PointCloud& cloud() const noexcept { return cloud_; }

  [[nodiscard]] LocalCutResult cut(double tau, CapacityFn fn) const {
    LocalCutResult r;
    r.mask = Mask(height_, width_, 0);
    r.source = source_;
    r.sink = sink_;
    if (seed_conflict_) {
      r.seed_conflict = true;
      for (std::size_t i = 0; i < in_b_.size(); ++i) r.mask[i] = in_b_[i];
      return r;
    }
    SpatialGraph g = threshold_edges(height_ * width_, edges_, tau, fn);
    g.source = source_;
    g.sink = sink_;
    const CutResult c = dinic_mincut(g);
    r.cut_value = c.cut_value;
    r.flow_value = c.flow_value;
    for (int id : c.source_side)
      if (in_b_[static_cast<std::size_t>(id)]) r.mask[static_cast<std::size_t>(id)] = 1;
    return r;
  }

 private:
  int height_;
  int width_;
  std::vector<std::uint8_t> in_b_;
  int source_ = -1;
  int sink_ = -1;
  bool seed_conflict_ = false;
  PointCloud cloud_;
  std::vector<KnnEdge> edges_;
};

/// Refines the semantic foreground `b` along 3-D boundaries; the result is the
/// source side of the min cut intersected with `b`.
inline LocalCutResult local_cut(const Bipartition& b, const EigenSolution& e, const DepthMap& depth, int grid_height,
                                int grid_width, const LocalCutOptions& opt = {}) {
  return LocalCutProblem(b, e, depth, grid_height, grid_width, opt).cut(opt.tau_knn, opt.capacity);
}

}  // namespace cuts3d

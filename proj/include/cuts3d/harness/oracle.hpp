#pragma once

// Slow, independent reference solvers used to check the production ones.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "cuts3d/error.hpp"
#include "cuts3d/localcut.hpp"
#include "cuts3d/ncut.hpp"

namespace cuts3d::harness {

inline constexpr int kBruteForceMaxNodes = 12;
inline constexpr int kDenseEigenMaxNodes = 512;

/// Minimum s-t cut by enumerating every partition with s on the source side
/// and t on the sink side. Among equal-valued cuts the first enumerated wins.
inline CutResult brute_force_mincut(const SpatialGraph& g) {
  require(g.nodes <= kBruteForceMaxNodes, ErrorCode::TooLarge,
          "brute-force min cut is limited to " + std::to_string(kBruteForceMaxNodes) + " nodes");
  require(g.source >= 0 && g.sink >= 0 && g.source < g.nodes && g.sink < g.nodes && g.source != g.sink,
          ErrorCode::InvalidArgument, "source and sink must be set and distinct");
  CutResult best;
  best.cut_value = std::numeric_limits<double>::infinity();
  std::uint32_t best_set = 0;
  const std::uint32_t all = (1u << g.nodes);
  for (std::uint32_t set = 0; set < all; ++set) {
    if (!(set >> g.source & 1u) || (set >> g.sink & 1u)) continue;
    double value = 0.0;
    for (const auto& a : g.arcs)
      if ((set >> a.from & 1u) && !(set >> a.to & 1u)) value += a.capacity;
    if (value < best.cut_value) {
      best.cut_value = value;
      best_set = set;
    }
  }
  for (int i = 0; i < g.nodes; ++i)
    if (best_set >> i & 1u) best.source_side.push_back(i);
  for (std::size_t i = 0; i < g.arcs.size(); ++i)
    if ((best_set >> g.arcs[i].from & 1u) && !(best_set >> g.arcs[i].to & 1u))
      best.saturated_arcs.push_back(static_cast<int>(i));
  best.flow_value = best.cut_value;
  return best;
}

/// Capacity of the arcs leaving `side` (given as a membership vector).
inline double cut_capacity(const SpatialGraph& g, const std::vector<std::uint8_t>& side) {
  double value = 0.0;
  for (const auto& a : g.arcs)
    if (side[static_cast<std::size_t>(a.from)] && !side[static_cast<std::size_t>(a.to)]) value += a.capacity;
  return value;
}

/// All eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending with matching eigenvector columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  require(a.cols() == n, ErrorCode::InvalidArgument, "jacobi_eigen needs a square matrix");
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    if (off == 0.0 || off < 1e-34 * a.squaredNorm()) break;
    for (Eigen::Index q = 1; q < n; ++q) {
      for (Eigen::Index p = 0; p < q; ++p) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p, q) rotation; columns first, then rows.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values[i] = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
  return {values, vectors};
}

/// Second-smallest generalized eigenpair of (Z - W) x = lambda Z x from a full
/// Jacobi decomposition of the normalized Laplacian.
inline EigenSolution dense_second_eigvec(const Eigen::MatrixXf& w_in) {
  const Eigen::Index n = w_in.rows();
  require(n <= kDenseEigenMaxNodes, ErrorCode::TooLarge,
          "dense eigen oracle is limited to " + std::to_string(kDenseEigenMaxNodes) + " nodes");
  require(n >= 2 && w_in.cols() == n, ErrorCode::InvalidArgument, "oracle needs a square graph with n >= 2");
  const Eigen::MatrixXd w = w_in.cast<double>();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += w(i, j);
    d[i] = s;
  }
  Eigen::MatrixXd lap(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      lap(i, j) = (i == j ? 1.0 : 0.0) - w(i, j) / std::sqrt(d[i] * d[j]);
  const auto [values, vectors] = jacobi_eigen(lap);

  EigenSolution sol;
  sol.node_ids.resize(static_cast<std::size_t>(n));
  std::iota(sol.node_ids.begin(), sol.node_ids.end(), 0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = vectors(i, 1) / std::sqrt(d[i]);
  x.normalize();
  canonical_sign(x);
  sol.eigenvalue = values[1];
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double wx = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) wx += w(i, j) * x[j];
    r[i] = d[i] * x[i] - wx - sol.eigenvalue * d[i] * x[i];
  }
  sol.residual = r.norm();
  sol.vector = std::move(x);
  return sol;
}

/// Minimum normalized-cut value over all proper bipartitions (n <= 12), with
/// the minimizing side containing node 0.
inline std::pair<double, std::vector<int>> brute_force_ncut(const Eigen::MatrixXf& w) {
  const int n = static_cast<int>(w.rows());
  require(n <= kBruteForceMaxNodes, ErrorCode::TooLarge, "brute-force ncut is limited to 12 nodes");
  require(n >= 2, ErrorCode::InvalidArgument, "brute-force ncut needs n >= 2");
  std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += w(i, j);
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_set = 0;
  for (std::uint32_t set = 1; set < (1u << n) - 1; set += 2) {  // node 0 always inside
    double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
    for (int i = 0; i < n; ++i) {
      const bool in_i = set >> i & 1u;
      (in_i ? vol_a : vol_b) += deg[static_cast<std::size_t>(i)];
      if (!in_i) continue;
      for (int j = 0; j < n; ++j)
        if (!(set >> j & 1u)) cut += w(i, j);
    }
    const double value = cut / vol_a + cut / vol_b;
    if (value < best) {
      best = value;
      best_set = set;
    }
  }
  std::vector<int> side;
  for (int i = 0; i < n; ++i)
    if (best_set >> i & 1u) side.push_back(i);
  return {best, side};
}

}  // namespace cuts3d::harness

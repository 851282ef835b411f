#pragma once

// Normalized-cut bipartitioning from the second generalized eigenvector of
// (Z - W) x = lambda Z x, repeated with node removal to find several objects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cuts3d/affinity.hpp"
#include "cuts3d/error.hpp"

namespace cuts3d {

struct EigenOptions {
  int max_iterations = 10000;  // total Lanczos steps over all restarts
  double tolerance = 1e-6;     // on ||(Z - W)x - lambda Z x||_2 with ||x||_2 = 1
  int krylov_dim = 300;        // basis size before an explicit restart
};

struct EigenSolution {
  Eigen::VectorXd vector;      // unit 2-norm, largest-magnitude entry positive
  double eigenvalue = 0.0;
  double residual = 0.0;
  std::vector<int> node_ids;   // global node index of each vector entry
  int iterations = 0;
};

namespace detail {

// y = W u with float storage and double accumulation.
inline Eigen::VectorXd matvec(const Eigen::MatrixXf& w, const Eigen::VectorXd& u) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(w.rows());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const double uj = u[j];
    if (uj == 0.0) continue;
    y.noalias() += w.col(j).cast<double>() * uj;
  }
  return y;
}

inline Eigen::VectorXd degrees(const Eigen::MatrixXf& w) {
  return matvec(w, Eigen::VectorXd::Ones(w.rows()));
}

// Deterministic, platform-independent start vector (splitmix64 hash of the index).
inline Eigen::VectorXd start_vector(Eigen::Index n, std::uint64_t salt) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t z = static_cast<std::uint64_t>(i) + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

}  // namespace detail

inline double generalized_residual(const Eigen::MatrixXf& w, const Eigen::VectorXd& x, double lambda) {
  const Eigen::VectorXd d = detail::degrees(w);
  const Eigen::VectorXd r = d.cwiseProduct(x) - detail::matvec(w, x) - lambda * d.cwiseProduct(x);
  return r.norm();
}

inline void canonical_sign(Eigen::VectorXd& x) {
  Eigen::Index k = 0;
  x.cwiseAbs().maxCoeff(&k);
  if (x[k] < 0) x = -x;
}

/// Second-smallest generalized eigenpair of the graph `w` (already restricted
/// to the active nodes). Works on the symmetric form Z^-1/2 W Z^-1/2 with the
/// trivial eigenvector Z^1/2 1 deflated, using Lanczos with full
/// reorthogonalization and explicit restarts.
inline EigenSolution solve_second_eigvec(const Eigen::MatrixXf& w, std::vector<int> node_ids,
                                         const EigenOptions& opt = {}) {
  const Eigen::Index n = w.rows();
  require(n >= 2 && w.cols() == n, ErrorCode::InvalidArgument, "eigensolver needs a square graph with n >= 2");
  if (node_ids.empty()) {
    node_ids.resize(static_cast<std::size_t>(n));
    std::iota(node_ids.begin(), node_ids.end(), 0);
  }
  require(static_cast<Eigen::Index>(node_ids.size()) == n, ErrorCode::ShapeMismatch, "node id list size mismatch");

  const Eigen::VectorXd d = detail::degrees(w);
  require(d.minCoeff() > 0.0, ErrorCode::InvalidArgument, "graph has a node with nonpositive degree");
  const Eigen::VectorXd sqrt_d = d.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_d = sqrt_d.cwiseInverse();
  const Eigen::VectorXd q0 = sqrt_d.normalized();

  EigenSolution sol;
  sol.node_ids = std::move(node_ids);

  auto finish = [&](Eigen::VectorXd y) {
    Eigen::VectorXd x = inv_sqrt_d.cwiseProduct(y);
    x.normalize();
    canonical_sign(x);
    const Eigen::VectorXd dx = d.cwiseProduct(x);
    const Eigen::VectorXd wx = detail::matvec(w, x);
    const double num = x.dot(dx) - x.dot(wx);
    const double den = x.dot(dx);
    sol.eigenvalue = num / den;
    sol.residual = (dx - wx - sol.eigenvalue * dx).norm();
    sol.vector = std::move(x);
  };

  if (n == 2) {
    // Only one direction is Z-orthogonal to the constant vector.
    Eigen::VectorXd x(2);
    x << d[1], -d[0];
    x.normalize();
    canonical_sign(x);
    const double off = w(0, 1);
    sol.eigenvalue = off / d[0] + off / d[1];
    const Eigen::VectorXd dx = d.cwiseProduct(x);
    sol.residual = (dx - detail::matvec(w, x) - sol.eigenvalue * dx).norm();
    sol.vector = std::move(x);
    return sol;
  }

  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return inv_sqrt_d.cwiseProduct(detail::matvec(w, inv_sqrt_d.cwiseProduct(v)));
  };
  auto deflate = [&](Eigen::VectorXd& v) { v -= q0.dot(v) * q0; };

  // ||r_g|| <= max(d) ||r_y|| bounds the generalized residual by the
  // normalized one, so the inner test is scaled accordingly.
  const double inner_tol = 0.25 * opt.tolerance / std::max(1.0, d.maxCoeff());
  const Eigen::Index max_basis = std::min<Eigen::Index>(n - 1, std::max(2, opt.krylov_dim));

  Eigen::VectorXd v = detail::start_vector(n, 0);
  deflate(v);
  deflate(v);
  v.normalize();

  int total = 0;
  int restarts = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  while (true) {
    Eigen::MatrixXd basis(n, max_basis);
    std::vector<double> alpha, beta;
    basis.col(0) = v;
    Eigen::VectorXd ritz = v;
    for (Eigen::Index k = 0; k < max_basis; ++k) {
      Eigen::VectorXd r = apply(basis.col(k));
      ++total;
      const double a = basis.col(k).dot(r);
      alpha.push_back(a);
      r -= a * basis.col(k);
      if (k > 0) r -= beta.back() * basis.col(k - 1);
      for (int pass = 0; pass < 2; ++pass) {
        r -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * r);
        deflate(r);
      }
      const double b = r.norm();
      const Eigen::Index m = k + 1;
      const bool breakdown = b <= 1e-12 * std::max(1.0, std::abs(a));
      const bool last = m == max_basis || total >= opt.max_iterations;
      if (breakdown || last || m % 8 == 0 || m <= 4) {
        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
        Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                    : Eigen::VectorXd();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        // ascending order; the top Ritz value is the smallest nontrivial lambda
        const Eigen::VectorXd s = tri.eigenvectors().col(m - 1);
        const double estimate = breakdown ? 0.0 : b * std::abs(s[m - 1]);
        if (estimate <= inner_tol || breakdown || last) {
          ritz = basis.leftCols(m) * s;
          deflate(ritz);
          ritz.normalize();
          break;
        }
      }
      beta.push_back(b);
      if (k + 1 < max_basis) basis.col(k + 1) = r / b;
    }

    finish(ritz);
    sol.iterations = total;
    best_residual = std::min(best_residual, sol.residual);
    if (sol.residual <= opt.tolerance) return sol;
    if (total >= opt.max_iterations || restarts > opt.max_iterations) {
      throw Error(ErrorCode::ConvergenceFailure, "eigensolver stopped after " + std::to_string(total) +
                                                     " iterations with residual " + std::to_string(best_residual));
    }
    // Rounding left the true residual above tolerance even though the Krylov
    // estimate converged: restart from the current Ritz vector.
    ++restarts;
    v = ritz;
  }
}

inline EigenSolution solve_second_eigvec(const AffinityMatrix& w, const EigenOptions& opt = {}) {
  return solve_second_eigvec(w.weights, {}, opt);
}

inline Eigen::MatrixXf restrict_graph(const Eigen::MatrixXf& w, const std::vector<int>& nodes) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXf sub(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) sub(i, j) = w(nodes[i], nodes[j]);
  return sub;
}

struct Bipartition {
  std::vector<int> foreground;  // global node ids, ascending
  std::vector<int> background;
  int seed_max = -1;            // argmax |x|
  int seed_min = -1;            // argmin |x|
};

/// Split at the mean of x; the foreground is the side holding argmax |x|.
inline Bipartition bipartition(const EigenSolution& e) {
  const auto& x = e.vector;
  const Eigen::Index n = x.size();
  require(n >= 1 && static_cast<Eigen::Index>(e.node_ids.size()) == n, ErrorCode::ShapeMismatch,
          "eigen solution without node ids");
  Eigen::Index imax = 0, imin = 0;
  const double amax = x.cwiseAbs().maxCoeff(&imax);
  x.cwiseAbs().minCoeff(&imin);
  const double mean = x.mean();
  const double spread = x.maxCoeff() - x.minCoeff();
  if (!(spread > 1e-12 * std::max(amax, 1e-300))) throw Error(ErrorCode::DegenerateSplit, "eigenvector is constant");

  const double side = x[imax] - mean > 0 ? 1.0 : -1.0;
  Bipartition b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int id = e.node_ids[static_cast<std::size_t>(i)];
    ((x[i] - mean) * side > 0 ? b.foreground : b.background).push_back(id);
  }
  if (b.foreground.empty() || b.background.empty())
    throw Error(ErrorCode::DegenerateSplit, "mean split leaves one side empty");
  std::sort(b.foreground.begin(), b.foreground.end());
  std::sort(b.background.begin(), b.background.end());
  b.seed_max = e.node_ids[static_cast<std::size_t>(imax)];
  b.seed_min = e.node_ids[static_cast<std::size_t>(imin)];
  return b;
}

struct CutLoopOptions {
  int iterations = 3;
  double rest_coverage = 0.95;   // a foreground this large is "the rest"
  int min_active_nodes = 16;
  double rest_eigenvalue = 0.95;  // no bipartition with conductance below lambda/2 exists
  EigenOptions eigen;
};

enum class StopReason { IterationsExhausted, RestDetected, TooFewNodes, ConvergenceFailure, DegenerateSplit };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::IterationsExhausted: return "iterations-exhausted";
    case StopReason::RestDetected: return "rest-detected";
    case StopReason::TooFewNodes: return "too-few-nodes";
    case StopReason::ConvergenceFailure: return "convergence-failure";
    case StopReason::DegenerateSplit: return "degenerate-split";
  }
  return "unknown";
}

struct CutStep {
  Bipartition partition;
  EigenSolution solution;
  std::vector<int> removed;  // nodes taken out of the active set after this step
};

struct CutLoopResult {
  std::vector<CutStep> steps;
  StopReason stop = StopReason::IterationsExhausted;
  std::string message;
};

/// Repeated bipartitioning with node removal. `refine(partition, solution)`
/// returns the nodes to remove (the emitted instance); an empty return removes
/// the whole foreground.
template <typename Refine>
CutLoopResult cut_loop(const AffinityMatrix& w, const CutLoopOptions& opt, Refine&& refine) {
  require(opt.iterations >= 1, ErrorCode::InvalidArgument, "cut loop needs at least one iteration");
  const int n = w.nodes();
  std::vector<int> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::uint8_t> alive(static_cast<std::size_t>(n), 1);

  CutLoopResult result;
  for (int it = 0; it < opt.iterations; ++it) {
    if (static_cast<int>(active.size()) < std::max(2, opt.min_active_nodes)) {
      result.stop = StopReason::TooFewNodes;
      return result;
    }
    EigenSolution sol;
    try {
      sol = static_cast<int>(active.size()) == n ? solve_second_eigvec(w.weights, active, opt.eigen)
                                                 : solve_second_eigvec(restrict_graph(w.weights, active), active,
                                                                       opt.eigen);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConvergenceFailure) throw;
      result.stop = StopReason::ConvergenceFailure;
      result.message = e.what();
      return result;
    }
    if (sol.eigenvalue >= opt.rest_eigenvalue) {
      result.stop = StopReason::RestDetected;
      return result;
    }
    Bipartition part;
    try {
      part = bipartition(sol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSplit) throw;
      result.stop = StopReason::DegenerateSplit;
      result.message = e.what();
      return result;
    }
    if (static_cast<double>(part.foreground.size()) >= opt.rest_coverage * static_cast<double>(active.size())) {
      result.stop = StopReason::RestDetected;
      return result;
    }

    std::vector<int> removed = refine(std::as_const(part), std::as_const(sol));
    if (removed.empty()) removed = part.foreground;
    for (int id : removed) {
      require(id >= 0 && id < n && alive[static_cast<std::size_t>(id)], ErrorCode::InvalidArgument,
              "refined instance contains an inactive node");
      alive[static_cast<std::size_t>(id)] = 0;
    }
    std::erase_if(active, [&](int id) { return !alive[static_cast<std::size_t>(id)]; });
    std::sort(removed.begin(), removed.end());
    result.steps.push_back({std::move(part), std::move(sol), std::move(removed)});
  }
  result.stop = StopReason::IterationsExhausted;
  return result;
}

inline CutLoopResult cut_loop(const AffinityMatrix& w, const CutLoopOptions& opt) {
  return cut_loop(w, opt, [](const Bipartition&, const EigenSolution&) { return std::vector<int>{}; });
}

}  // namespace cuts3d

#pragma once

// Dinic's blocking-flow max-flow. Arcs are stored in pairs (arc, arc ^ 1 = its
// residual twin) and scanned in insertion order, so results are deterministic.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <vector>

#include "cuts3d/error.hpp"

namespace cuts3d {

template <typename Cap>
class Dinic {
  static_assert(std::is_arithmetic_v<Cap>);

 public:
  struct Arc {
    int to;
    Cap capacity;
    Cap flow;
  };

  explicit Dinic(int nodes) : adjacency_(static_cast<std::size_t>(nodes)) {
    require(nodes >= 0, ErrorCode::InvalidArgument, "negative node count");
  }

  [[nodiscard]] int nodes() const noexcept { return static_cast<int>(adjacency_.size()); }

  /// Returns the id of the forward arc; the reverse arc is id ^ 1.
  int add_edge(int from, int to, Cap capacity, Cap reverse_capacity = Cap{0}) {
    require(from >= 0 && from < nodes() && to >= 0 && to < nodes(), ErrorCode::InvalidArgument,
            "arc endpoint out of range");
    require(capacity >= Cap{0} && reverse_capacity >= Cap{0}, ErrorCode::InvalidArgument, "negative capacity");
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, capacity, Cap{0}});
    arcs_.push_back({from, reverse_capacity, Cap{0}});
    adjacency_[static_cast<std::size_t>(from)].push_back(id);
    adjacency_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  [[nodiscard]] const Arc& arc(int id) const { return arcs_[static_cast<std::size_t>(id)]; }

  Cap max_flow(int source, int sink) {
    require(source >= 0 && source < nodes() && sink >= 0 && sink < nodes() && source != sink,
            ErrorCode::InvalidArgument, "source and sink must be distinct valid nodes");
    source_ = source;
    if constexpr (std::is_floating_point_v<Cap>) {
      Cap largest{0};
      for (const auto& a : arcs_) largest = std::max(largest, a.capacity);
      epsilon_ = largest * Cap(1e-12);
    }
    level_.assign(adjacency_.size(), -1);
    next_.assign(adjacency_.size(), 0);
    Cap total{0};
    while (build_levels(source, sink)) {
      std::fill(next_.begin(), next_.end(), 0);
      while (true) {
        const Cap pushed = augment(source, sink, std::numeric_limits<Cap>::max());
        if (pushed <= epsilon_) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Nodes reachable from the source in the residual graph of the last max_flow.
  [[nodiscard]] std::vector<std::uint8_t> source_side() const {
    std::vector<std::uint8_t> seen(adjacency_.size(), 0);
    if (source_ < 0) return seen;
    std::vector<int> stack{source_};
    seen[static_cast<std::size_t>(source_)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int id : adjacency_[static_cast<std::size_t>(u)]) {
        const auto& a = arcs_[static_cast<std::size_t>(id)];
        if (a.capacity - a.flow > epsilon_ && !seen[static_cast<std::size_t>(a.to)]) {
          seen[static_cast<std::size_t>(a.to)] = 1;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

 private:
  bool build_levels(int source, int sink) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{source};
    level_[static_cast<std::size_t>(source)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (int id : adjacency_[static_cast<std::size_t>(u)]) {
        const auto& a = arcs_[static_cast<std::size_t>(id)];
        if (a.capacity - a.flow > epsilon_ && level_[static_cast<std::size_t>(a.to)] < 0) {
          level_[static_cast<std::size_t>(a.to)] = level_[static_cast<std::size_t>(u)] + 1;
          queue.push_back(a.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  Cap augment(int u, int sink, Cap limit) {
    if (u == sink) return limit;
    auto& out = adjacency_[static_cast<std::size_t>(u)];
    for (int& i = next_[static_cast<std::size_t>(u)]; i < static_cast<int>(out.size()); ++i) {
      const int id = out[static_cast<std::size_t>(i)];
      auto& a = arcs_[static_cast<std::size_t>(id)];
      const Cap residual = a.capacity - a.flow;
      if (residual <= epsilon_ || level_[static_cast<std::size_t>(a.to)] != level_[static_cast<std::size_t>(u)] + 1)
        continue;
      const Cap pushed = augment(a.to, sink, std::min(limit, residual));
      if (pushed > epsilon_) {
        a.flow += pushed;
        arcs_[static_cast<std::size_t>(id ^ 1)].flow -= pushed;
        return pushed;
      }
    }
    return Cap{0};
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> level_;
  std::vector<int> next_;
  int source_ = -1;
  Cap epsilon_{0};
};

}  // namespace cuts3d

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "lcx/neighbor_graph.hpp"

namespace lcx {

/// A source-to-target path. `length` is the left-to-right sum of the edge
/// weights along `nodes`; it is NaN when no path was found.
struct PathResult {
  bool found = false;
  std::vector<NodeId> nodes;
  double length = std::numeric_limits<double>::quiet_NaN();
};

/// Reusable per-thread Dijkstra state; resets in O(touched nodes).
class DijkstraWorkspace {
 public:
  explicit DijkstraWorkspace(std::size_t n_nodes = 0);

 private:
  friend std::vector<PathResult> dijkstra_paths(const NeighborGraph&, NodeId, std::span<const NodeId>,
                                                DijkstraWorkspace&);
  void prepare(std::size_t n_nodes);

  std::vector<double> dist_;
  std::vector<NodeId> pred_;
  std::vector<std::uint8_t> settled_;
  std::vector<std::uint8_t> wanted_;
  std::vector<NodeId> touched_;
};

/// Binary-heap Dijkstra from src, stopping once dst is settled. Heap ties are
/// popped in ascending node id and a predecessor is only replaced on a strict
/// improvement, so the returned path is deterministic.
PathResult dijkstra_path(const NeighborGraph& g, NodeId src, NodeId dst);

/// One search from src serving several targets; stops when all are settled.
/// Each returned path equals dijkstra_path(g, src, target).
std::vector<PathResult> dijkstra_paths(const NeighborGraph& g, NodeId src, std::span<const NodeId> targets,
                                       DijkstraWorkspace& workspace);

inline constexpr std::size_t kFloydWarshallCap = 1000;

/// All-pairs shortest distances with next-hop reconstruction. Test oracle
/// only: O(N^3) time, O(N^2) memory.
class AllPairsShortestPaths {
 public:
  std::size_t n_nodes() const noexcept { return n_; }
  /// +inf when unreachable.
  double distance(NodeId i, NodeId j) const { return dist_[i * n_ + j]; }
  /// Reconstructed path; its length is re-summed left to right along the path.
  PathResult path(const NeighborGraph& g, NodeId i, NodeId j) const;

 private:
  friend AllPairsShortestPaths floyd_warshall(const NeighborGraph&, std::size_t);
  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<NodeId> next_;
};

AllPairsShortestPaths floyd_warshall(const NeighborGraph& g, std::size_t cap = kFloydWarshallCap);

}  // namespace lcx

#include "lcx/shortest_path.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "lcx/error.hpp"

namespace lcx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

void check_node(const NeighborGraph& g, NodeId u, const char* role) {
  if (u >= g.n_nodes()) {
    throw InputError(std::string(role) + " node " + std::to_string(u) + " out of range (n_nodes = " +
                     std::to_string(g.n_nodes()) + ")");
  }
}

PathResult trace(NodeId src, NodeId dst, const std::vector<NodeId>& pred, const std::vector<double>& dist) {
  PathResult out;
  out.found = true;
  out.length = dist[dst];
  for (NodeId v = dst; v != src; v = pred[v]) out.nodes.push_back(v);
  out.nodes.push_back(src);
  std::reverse(out.nodes.begin(), out.nodes.end());
  return out;
}

}  // namespace

DijkstraWorkspace::DijkstraWorkspace(std::size_t n_nodes) { prepare(n_nodes); }

void DijkstraWorkspace::prepare(std::size_t n_nodes) {
  if (dist_.size() != n_nodes) {
    dist_.assign(n_nodes, kInf);
    pred_.assign(n_nodes, kNoNode);
    settled_.assign(n_nodes, 0);
    wanted_.assign(n_nodes, 0);
    touched_.clear();
    return;
  }
  for (NodeId v : touched_) {
    dist_[v] = kInf;
    pred_[v] = kNoNode;
    settled_[v] = 0;
  }
  touched_.clear();
}

std::vector<PathResult> dijkstra_paths(const NeighborGraph& g, NodeId src, std::span<const NodeId> targets,
                                       DijkstraWorkspace& ws) {
  check_node(g, src, "source");
  for (NodeId t : targets) {
    check_node(g, t, "target");
    if (t == src) throw InputError("source and target are both node " + std::to_string(src));
  }
  ws.prepare(g.n_nodes());

  std::size_t remaining = 0;
  for (NodeId t : targets) {
    if (!ws.wanted_[t]) {
      ws.wanted_[t] = 1;
      ++remaining;
    }
  }

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  ws.dist_[src] = 0.0;
  ws.touched_.push_back(src);
  heap.push({0.0, src});

  while (!heap.empty() && remaining > 0) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (ws.settled_[u]) continue;
    ws.settled_[u] = 1;
    if (ws.wanted_[u]) --remaining;
    if (remaining == 0) break;
    for (const Edge& e : g.neighbors(u)) {
      const NodeId v = e.neighbor;
      if (ws.settled_[v]) continue;
      const double nd = d + e.weight;
      if (nd < ws.dist_[v]) {
        if (ws.dist_[v] == kInf) ws.touched_.push_back(v);
        ws.dist_[v] = nd;
        ws.pred_[v] = u;
        heap.push({nd, v});
      }
    }
  }

  for (NodeId t : targets) ws.wanted_[t] = 0;

  std::vector<PathResult> out;
  out.reserve(targets.size());
  for (NodeId t : targets) {
    if (ws.settled_[t]) {
      out.push_back(trace(src, t, ws.pred_, ws.dist_));
    } else {
      out.emplace_back();
    }
  }
  return out;
}

PathResult dijkstra_path(const NeighborGraph& g, NodeId src, NodeId dst) {
  DijkstraWorkspace ws(g.n_nodes());
  const NodeId target[1] = {dst};
  return std::move(dijkstra_paths(g, src, target, ws).front());
}

AllPairsShortestPaths floyd_warshall(const NeighborGraph& g, std::size_t cap) {
  const std::size_t n = g.n_nodes();
  if (n > cap) {
    throw InputError("Floyd-Warshall limited to " + std::to_string(cap) + " nodes, graph has " + std::to_string(n));
  }
  AllPairsShortestPaths ap;
  ap.n_ = n;
  ap.dist_.assign(n * n, kInf);
  ap.next_.assign(n * n, kNoNode);
  for (std::size_t i = 0; i < n; ++i) {
    ap.dist_[i * n + i] = 0.0;
    ap.next_[i * n + i] = static_cast<NodeId>(i);
    for (const Edge& e : g.neighbors(static_cast<NodeId>(i))) {
      ap.dist_[i * n + e.neighbor] = e.weight;
      ap.next_[i * n + e.neighbor] = e.neighbor;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = ap.dist_[i * n + k];
      if (dik == kInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double cand = dik + ap.dist_[k * n + j];
        if (cand < ap.dist_[i * n + j]) {
          ap.dist_[i * n + j] = cand;
          ap.next_[i * n + j] = ap.next_[i * n + k];
        }
      }
    }
  }
  return ap;
}

PathResult AllPairsShortestPaths::path(const NeighborGraph& g, NodeId i, NodeId j) const {
  PathResult out;
  if (i >= n_ || j >= n_) throw InputError("node out of range");
  if (next_[i * n_ + j] == kNoNode) return out;
  out.found = true;
  out.nodes.push_back(i);
  double length = 0.0;
  for (NodeId u = i; u != j;) {
    const NodeId v = next_[u * n_ + j];
    length += g.edge_weight(u, v);
    out.nodes.push_back(v);
    u = v;
  }
  out.length = length;
  return out;
}

}  // namespace lcx

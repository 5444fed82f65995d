#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcx/core_data.hpp"
#include "lcx/pair_sampling.hpp"

namespace lcx {

inline constexpr std::size_t kDefaultK = 10;

enum class Symmetrization {
  union_,        // edge if either endpoint lists the other
  intersection,  // edge only if both endpoints list each other
};

struct KnnParams {
  std::size_t k = kDefaultK;
  Symmetrization symmetrization = Symmetrization::union_;
  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

struct EpsilonParams {
  double eps = 0.0;
  friend bool operator==(const EpsilonParams&, const EpsilonParams&) = default;
};

using GraphParams = std::variant<KnnParams, EpsilonParams>;

struct Edge {
  NodeId neighbor;
  double weight;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph in compressed adjacency form. Each node's
/// neighbor list is sorted by id; every edge is stored in both directions.
class NeighborGraph {
 public:
  NeighborGraph() = default;

  /// Builds from per-node adjacency lists. The lists must already be
  /// symmetric; they are sorted by neighbor id here.
  NeighborGraph(std::vector<std::vector<Edge>> adjacency, GraphParams params);

  /// Builds from undirected edges (u, v, w); each edge is inserted both ways.
  struct UndirectedEdge {
    NodeId u;
    NodeId v;
    double weight;
  };
  static NeighborGraph from_edges(std::size_t n_nodes, std::span<const UndirectedEdge> edges, GraphParams params);

  std::size_t n_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  /// Undirected edge count.
  std::size_t n_edges() const noexcept { return edges_.size() / 2; }
  std::span<const Edge> neighbors(NodeId u) const {
    return {edges_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }
  std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  const GraphParams& params() const noexcept { return params_; }
  bool symmetrized() const noexcept { return true; }

  /// Undirected edges with u < v, ordered by (u, v).
  std::vector<UndirectedEdge> edge_list() const;

  /// Weight of edge (u, v), or a negative value when absent.
  double edge_weight(NodeId u, NodeId v) const;

  friend bool operator==(const NeighborGraph&, const NeighborGraph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Edge> edges_;
  GraphParams params_;
};

inline bool operator==(const NeighborGraph::UndirectedEdge& a, const NeighborGraph::UndirectedEdge& b) {
  return a.u == b.u && a.v == b.v && a.weight == b.weight;
}

/// Directed K-nearest-neighbor lists, row i holding the K nearest points to i
/// ordered by (distance, id).
struct KnnTable {
  std::size_t n_points = 0;
  std::size_t k = 0;
  std::vector<NodeId> ids;
  std::vector<double> distances;

  std::span<const NodeId> neighbors(std::size_t i) const { return {ids.data() + i * k, k}; }
  std::span<const double> neighbor_distances(std::size_t i) const { return {distances.data() + i * k, k}; }
};

/// Euclidean distance between two f32 rows, accumulated in f64 in a fixed
/// order. Every distance in the toolkit goes through this function.
double euclidean_distance(std::span<const float> a, std::span<const float> b);

/// Exact brute-force K nearest neighbors. Ties are broken by lower node id.
KnnTable knn_table(const EmbeddingMatrix& emb, std::size_t k, std::size_t workers = 0);

NeighborGraph build_knn_graph(const EmbeddingMatrix& emb, std::size_t k,
                              Symmetrization symmetrization = Symmetrization::union_, std::size_t workers = 0);
NeighborGraph knn_graph_from_table(const KnnTable& table, Symmetrization symmetrization);

/// Edge (u, v) iff 0 < d(u, v) <= eps.
NeighborGraph build_epsilon_graph(const EmbeddingMatrix& emb, double eps, std::size_t workers = 0);

/// The target_edges-th smallest pairwise distance: the eps whose graph has
/// target_edges edges, up to ties.
double eps_for_edge_budget(const EmbeddingMatrix& emb, std::size_t target_edges, std::size_t workers = 0);

/// Connected-component id per node (ids dense, ordered by smallest member).
std::vector<std::uint32_t> connected_components(const NeighborGraph& g);

struct ClassPathExistence {
  ClassId class_id;
  std::size_t n_pairs;
  double fraction;  // share of sampled in-class pairs joined by some path
};

struct GraphStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_components = 0;
  std::map<std::size_t, std::size_t> degree_histogram;  // degree -> node count
  std::vector<ClassPathExistence> path_exists;          // classes with >= 2 points
};

/// Path existence is evaluated on the pairs sample_pairs draws for the same
/// (n_pairs, seed) as graph convexity.
GraphStats graph_stats(const NeighborGraph& g, const LabelVector& labels, std::size_t n_pairs = kDefaultPairsPerClass,
                       std::uint64_t seed = 0);

/// e.g. {"mode":"knn","k":10,"symmetrization":"union"} or {"mode":"epsilon","eps":0.5}.
nlohmann::ordered_json graph_params_json(const GraphParams& params);

/// CSV "u,v,weight" (u < v) plus a JSON sidecar holding the graph params.
void save_graph(const NeighborGraph& g, const std::filesystem::path& csv_path, const std::filesystem::path& json_path);
NeighborGraph load_graph(const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

}  // namespace lcx

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcx/core_data.hpp"
#include "lcx/neighbor_graph.hpp"
#include "lcx/pair_sampling.hpp"
#include "lcx/shortest_path.hpp"

namespace lcx {

/// Per-class result shared by the graph and Euclidean measures.
struct ClassConvexity {
  ClassId class_id = 0;
  bool absent = false;  // fewer than two points: nothing was scored
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n_class = 0;
  std::size_t n_pairs = 0;
  std::size_t n_disconnected = 0;             // graph measure only
  std::optional<double> existing_only_mean;   // graph measure only; empty when no pair is connected
  std::vector<NodePair> pairs;                // kept when requested
  std::vector<double> pair_scores;            // parallel to pairs
};

struct LayerConvexityReport {
  std::string metric;  // "graph" or "euclidean"
  std::uint32_t layer_id = 0;
  std::string layer_name;
  nlohmann::ordered_json params;  // effective parameters, defaults resolved
  std::vector<ClassConvexity> classes;
  std::optional<double> overall_mean;                // unweighted over present classes
  std::optional<double> overall_existing_only_mean;  // graph measure only
  std::vector<std::string> warnings;
  bool truncated = false;  // scoring stopped early; see `error`
  std::string error;
};

/// Share of interior path nodes labelled `cls`; 1 for a direct edge, 0 when
/// no path was found.
double path_score(const PathResult& p, const LabelVector& labels, ClassId cls);

struct GraphConvexityParams {
  std::size_t n_pairs = kDefaultPairsPerClass;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool keep_pair_scores = false;
};

/// Samples pairs per class, scores the Dijkstra path of each and aggregates
/// with SEM over the class size. Pairs sharing a source are served by one
/// search; the paths equal those of independent single-pair queries.
LayerConvexityReport graph_convexity(const NeighborGraph& g, const LabelVector& labels,
                                     const GraphConvexityParams& params = {});

/// Rows kept when each class is capped at `cap` points, ascending. Classes
/// at or under the cap keep every point.
std::vector<NodeId> subsample_per_class(const LabelVector& labels, std::size_t cap, std::uint64_t seed);

inline constexpr std::size_t kDefaultClassCap = 5000;

}  // namespace lcx

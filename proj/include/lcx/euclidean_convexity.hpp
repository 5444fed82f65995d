#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "lcx/graph_convexity.hpp"
#include "lcx/oracle.hpp"

namespace lcx {

/// N_p interior points at t_i = i / (N_p + 1), i = 1..N_p.
struct InterpolationScheme {
  std::size_t n_points = 10;
  double t(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_points + 1); }
};

/// Row i - 1 holds t_i x + (1 - t_i) y.
PointBatch interpolate(std::span<const float> x, std::span<const float> y, const InterpolationScheme& scheme = {});

inline constexpr std::size_t kPairsPerOracleBatch = 1024;

struct EuclideanConvexityParams {
  InterpolationScheme scheme;
  std::size_t n_pairs = kDefaultPairsPerClass;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::size_t pairs_per_batch = kPairsPerOracleBatch;
  bool keep_pair_scores = false;
};

/// Scores each sampled in-class pair by the share of its interpolants the
/// oracle assigns to the class. Pairs are sampled exactly as for graph
/// convexity. When the oracle fails the report is returned with
/// truncated = true, covering the batches that completed before the first
/// failure.
LayerConvexityReport euclidean_convexity(const EmbeddingMatrix& emb, const LabelVector& labels,
                                         ClassifierOracle& oracle, const EuclideanConvexityParams& params = {});

}  // namespace lcx

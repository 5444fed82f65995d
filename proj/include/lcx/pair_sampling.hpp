#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lcx/core_data.hpp"

namespace lcx {

/// Unordered pair of distinct nodes, stored with first < second.
struct NodePair {
  NodeId first;
  NodeId second;
  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Default number of pairs sampled per class.
inline constexpr std::size_t kDefaultPairsPerClass = 5000;

/// Samples up to `n_pairs` distinct unordered pairs of nodes labelled `cls`,
/// uniformly without replacement. When the class has at most `n_pairs` pairs
/// all of them are returned in lexicographic order. Pair i is drawn from a
/// SplitMix64 stream keyed by (seed, cls, i), so the result depends only on
/// (labels, cls, n_pairs, seed). Classes with fewer than two points give an
/// empty list.
std::vector<NodePair> sample_pairs(const LabelVector& labels, ClassId cls, std::size_t n_pairs, std::uint64_t seed);

/// Same, over an explicit ascending member list.
std::vector<NodePair> sample_pairs_from(const std::vector<NodeId>& members, ClassId cls, std::size_t n_pairs,
                                        std::uint64_t seed);

}  // namespace lcx

#include "lcx/pair_sampling.hpp"

#include <cmath>
#include <unordered_set>

#include "lcx/rng.hpp"

namespace lcx {

namespace {

// Maps a rank in [0, m(m-1)/2) to the pair (a, b), a < b, in row-major order
// of the strict upper triangle.
std::pair<std::size_t, std::size_t> unrank_pair(std::uint64_t rank, std::size_t m) {
  // Row a holds m-1-a pairs; rows before a hold a*m - a*(a+1)/2.
  auto before = [m](std::uint64_t a) { return a * m - a * (a + 1) / 2; };
  const double md = static_cast<double>(m);
  auto a = static_cast<std::uint64_t>(
      std::floor(((2.0 * md - 1.0) - std::sqrt((2.0 * md - 1.0) * (2.0 * md - 1.0) - 8.0 * static_cast<double>(rank))) / 2.0));
  while (a > 0 && before(a) > rank) --a;
  while (before(a + 1) <= rank) ++a;
  const std::uint64_t b = a + 1 + (rank - before(a));
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

}  // namespace

std::vector<NodePair> sample_pairs_from(const std::vector<NodeId>& members, ClassId cls, std::size_t n_pairs,
                                        std::uint64_t seed) {
  std::vector<NodePair> out;
  const std::size_t m = members.size();
  if (m < 2 || n_pairs == 0) return out;
  const std::uint64_t total = static_cast<std::uint64_t>(m) * (m - 1) / 2;

  if (total <= n_pairs) {
    out.reserve(total);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) out.push_back({members[a], members[b]});
    }
    return out;
  }

  out.reserve(n_pairs);
  std::unordered_set<std::uint64_t> taken;
  taken.reserve(n_pairs * 2);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    SplitMix64 rng(derive_seed(seed, cls, i));
    std::uint64_t rank = rng.below(total);
    while (!taken.insert(rank).second) rank = rng.below(total);
    const auto [a, b] = unrank_pair(rank, m);
    out.push_back({members[a], members[b]});
  }
  return out;
}

std::vector<NodePair> sample_pairs(const LabelVector& labels, ClassId cls, std::size_t n_pairs, std::uint64_t seed) {
  return sample_pairs_from(labels.members(cls), cls, n_pairs, seed);
}

}  // namespace lcx

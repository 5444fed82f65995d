#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lcx/error.hpp"
#include "lcx/neighbor_graph.hpp"
#include "lcx/rng.hpp"
#include "test_util.hpp"

using namespace lcx;

namespace {

EmbeddingMatrix points(std::size_t d, std::vector<float> v) {
  const std::size_t n = v.size() / d;
  return EmbeddingMatrix(n, d, std::move(v));
}

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

EdgeSet edge_set(const NeighborGraph& g) {
  EdgeSet s;
  for (const auto& e : g.edge_list()) s.insert({e.u, e.v});
  return s;
}

// Plain double-loop distance, written independently of the library kernel.
double naive_distance(const EmbeddingMatrix& m, std::size_t i, std::size_t j) {
  long double s = 0;
  for (std::size_t c = 0; c < m.dim; ++c) {
    const long double d = static_cast<long double>(m.at(i, c)) - m.at(j, c);
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s));
}

}  // namespace

TEST(Knn, CollinearK1) {
  const auto g = build_knn_graph(points(1, {0, 1, 3}), 1);
  const auto edges = g.edge_list();
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0], (NeighborGraph::UndirectedEdge{0, 1, 1.0}));
  EXPECT_EQ(edges[1], (NeighborGraph::UndirectedEdge{1, 2, 2.0}));
}

TEST(Knn, TwoPoints) {
  const auto g = build_knn_graph(points(2, {0, 0, 3, 4}), 1);
  ASSERT_EQ(g.n_edges(), 1u);
  EXPECT_EQ(g.edge_weight(0, 1), 5.0);
}

TEST(Knn, UnitSquareNoDiagonals) {
  const auto g = build_knn_graph(points(2, {0, 0, 1, 0, 0, 1, 1, 1}), 2);
  EXPECT_EQ(edge_set(g), (EdgeSet{{0, 1}, {0, 2}, {1, 3}, {2, 3}}));
  for (const auto& e : g.edge_list()) EXPECT_EQ(e.weight, 1.0);
}

TEST(Knn, TieBrokenByLowerId) {
  // Node 0 is equidistant from 1 and 2.
  const auto t = knn_table(points(1, {0, -1, 1, 5}), 1);
  EXPECT_EQ(t.neighbors(0)[0], 1u);
}

TEST(Knn, KOutOfRange) {
  const auto m = points(1, {0, 1, 3});
  EXPECT_THROW(build_knn_graph(m, 0), InputError);
  EXPECT_THROW(build_knn_graph(m, 3), InputError);
}

TEST(Knn, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const std::size_t n = 150 + 100 * seed;
    const auto m = random_points(n, 3 + 5 * seed, seed);
    const std::size_t k = 7;
    const auto t = knn_table(m, k);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<double, NodeId>> row;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) row.push_back({naive_distance(m, i, j), static_cast<NodeId>(j)});
      }
      std::sort(row.begin(), row.end());
      for (std::size_t r = 0; r < k; ++r) {
        EXPECT_EQ(t.neighbors(i)[r], row[r].second) << "seed " << seed << " node " << i;
        EXPECT_NEAR(t.neighbor_distances(i)[r], row[r].first, 1e-12 * (1 + row[r].first));
      }
    }
  }
}

TEST(Knn, DistanceKernelMatchesScalarBitForBit) {
  const auto m = random_points(120, 37, 5);
  const auto t = knn_table(m, 5);
  for (std::size_t i = 0; i < m.n_points; ++i) {
    for (std::size_t r = 0; r < 5; ++r) {
      EXPECT_EQ(t.neighbor_distances(i)[r], euclidean_distance(m.row(i), m.row(t.neighbors(i)[r])));
    }
  }
}

TEST(Knn, SymmetricPositiveAndMinDegree) {
  const auto m = random_points(300, 5, 9);
  const auto g = build_knn_graph(m, 10);
  for (NodeId u = 0; u < g.n_nodes(); ++u) {
    EXPECT_GE(g.degree(u), 10u);
    for (const auto& e : g.neighbors(u)) {
      EXPECT_NE(e.neighbor, u);
      EXPECT_GT(e.weight, 0.0);
      EXPECT_EQ(g.edge_weight(e.neighbor, u), e.weight);
    }
  }
}

TEST(Knn, IntersectionIsSubsetOfUnion) {
  const auto m = random_points(200, 4, 3);
  const auto u = edge_set(build_knn_graph(m, 5, Symmetrization::union_));
  const auto i = edge_set(build_knn_graph(m, 5, Symmetrization::intersection));
  EXPECT_LT(i.size(), u.size());
  EXPECT_TRUE(std::includes(u.begin(), u.end(), i.begin(), i.end()));
}

TEST(Knn, WorkerCountDoesNotChangeGraph) {
  const auto m = random_points(500, 16, 21);
  EXPECT_EQ(build_knn_graph(m, 10, Symmetrization::union_, 1), build_knn_graph(m, 10, Symmetrization::union_, 4));
}

TEST(Knn, DuplicatePointsJoinedByZeroWeightEdges) {
  const auto g = build_knn_graph(points(1, {2, 2, 2, 9}), 2);
  EXPECT_EQ(g.edge_weight(0, 1), 0.0);
  EXPECT_EQ(g.edge_weight(0, 2), 0.0);
}

TEST(Knn, IsometryAndScalingKeepEdgeSet) {
  const auto m = random_points(200, 2, 4);
  const double c = 2.5;
  const double th = 0.7;
  std::vector<float> v(m.values.size());
  for (std::size_t i = 0; i < m.n_points; ++i) {
    const double x = m.at(i, 0);
    const double y = m.at(i, 1);
    v[2 * i] = static_cast<float>(c * (std::cos(th) * x - std::sin(th) * y) + 3.0);
    v[2 * i + 1] = static_cast<float>(c * (std::sin(th) * x + std::cos(th) * y) - 1.0);
  }
  const auto g1 = build_knn_graph(m, 6);
  const auto g2 = build_knn_graph(EmbeddingMatrix(m.n_points, 2, v), 6);
  EXPECT_EQ(edge_set(g1), edge_set(g2));
  for (const auto& e : g1.edge_list()) EXPECT_NEAR(g2.edge_weight(e.u, e.v), c * e.weight, 1e-5 * (1 + e.weight));
}

TEST(Epsilon, CollinearExample) {
  const auto g = build_epsilon_graph(points(1, {0, 1, 3}), 1.5);
  EXPECT_EQ(edge_set(g), (EdgeSet{{0, 1}}));
}

TEST(Epsilon, CompleteAndEmpty) {
  const auto m = random_points(30, 3, 1);
  EXPECT_EQ(build_epsilon_graph(m, 1e6).n_edges(), 30u * 29u / 2u);
  const auto empty = build_epsilon_graph(m, 1e-9);
  EXPECT_EQ(empty.n_edges(), 0u);
  const LabelVector labels{std::vector<ClassId>(30, 0), 1, LabelKind::data};
  EXPECT_EQ(graph_stats(empty, labels).n_components, 30u);
}

TEST(Epsilon, NonPositiveRejected) { EXPECT_THROW(build_epsilon_graph(points(1, {0, 1}), 0.0), InputError); }

TEST(EdgeBudget, Examples) {
  const auto m = points(1, {0, 1, 3});  // distances 1, 2, 3
  EXPECT_EQ(eps_for_edge_budget(m, 2), 2.0);
  EXPECT_EQ(eps_for_edge_budget(m, 3), 3.0);
  EXPECT_EQ(eps_for_edge_budget(m, 1), 1.0);
  EXPECT_THROW(eps_for_edge_budget(m, 0), InputError);
  EXPECT_THROW(eps_for_edge_budget(m, 4), InputError);
}

TEST(EdgeBudget, EpsilonGraphHitsBudget) {
  const auto m = random_points(80, 3, 8);
  const double eps = eps_for_edge_budget(m, 400);
  EXPECT_EQ(build_epsilon_graph(m, eps).n_edges(), 400u);
}

TEST(Stats, FourCycle) {
  std::vector<NeighborGraph::UndirectedEdge> e{{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}};
  const auto g = NeighborGraph::from_edges(4, e, KnnParams{});
  const auto s = graph_stats(g, LabelVector{{0, 1, 0, 1}, 2, LabelKind::data});
  EXPECT_EQ(s.n_components, 1u);
  for (const auto& p : s.path_exists) EXPECT_EQ(p.fraction, 1.0);
  EXPECT_EQ(s.degree_histogram.at(2), 4u);
}

TEST(Stats, NoEdges) {
  const auto g = NeighborGraph::from_edges(5, {}, EpsilonParams{0.1});
  const auto s = graph_stats(g, LabelVector{{0, 0, 0, 0, 0}, 1, LabelKind::data});
  EXPECT_EQ(s.n_components, 5u);
  ASSERT_EQ(s.path_exists.size(), 1u);
  EXPECT_EQ(s.path_exists[0].fraction, 0.0);
}

TEST(Stats, TwoCliquesOneClass) {
  // Cliques of 6 and 3 nodes, one class: 15 + 3 joined pairs out of 36.
  std::vector<NeighborGraph::UndirectedEdge> e;
  for (NodeId a = 0; a < 6; ++a)
    for (NodeId b = a + 1; b < 6; ++b) e.push_back({a, b, 1});
  for (NodeId a = 6; a < 9; ++a)
    for (NodeId b = a + 1; b < 9; ++b) e.push_back({a, b, 1});
  const auto g = NeighborGraph::from_edges(9, e, KnnParams{});
  const auto s = graph_stats(g, LabelVector{std::vector<ClassId>(9, 0), 1, LabelKind::data});
  ASSERT_EQ(s.path_exists.size(), 1u);
  EXPECT_EQ(s.path_exists[0].n_pairs, 36u);
  EXPECT_EQ(s.path_exists[0].fraction, 0.5);
  EXPECT_EQ(s.n_components, 2u);
}

TEST(Stats, LengthMismatch) {
  const auto g = NeighborGraph::from_edges(3, {}, KnnParams{});
  EXPECT_THROW(graph_stats(g, LabelVector{{0, 0}, 1, LabelKind::data}), InputError);
}

TEST(Graph, RejectsSelfLoopsAndNegativeWeights) {
  std::vector<NeighborGraph::UndirectedEdge> loop{{1, 1, 1.0}};
  EXPECT_THROW(NeighborGraph::from_edges(2, loop, KnnParams{}), InputError);
  std::vector<NeighborGraph::UndirectedEdge> neg{{0, 1, -1.0}};
  EXPECT_THROW(NeighborGraph::from_edges(2, neg, KnnParams{}), InputError);
}

TEST(Graph, SaveLoadRoundTrip) {
  TempDir dir;
  const auto g = build_knn_graph(random_points(60, 3, 2), 4, Symmetrization::intersection);
  save_graph(g, dir.path / "g.csv", dir.path / "g.json");
  EXPECT_EQ(load_graph(dir.path / "g.csv", dir.path / "g.json"), g);
  const auto e = build_epsilon_graph(random_points(40, 2, 3), 0.8);
  save_graph(e, dir.path / "e.csv", dir.path / "e.json");
  EXPECT_EQ(load_graph(dir.path / "e.csv", dir.path / "e.json"), e);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lcx/error.hpp"
#include "lcx/graph_convexity.hpp"
#include "lcx/report.hpp"
#include "test_util.hpp"

using namespace lcx;

namespace {

NeighborGraph path_graph(std::size_t n) {
  std::vector<NeighborGraph::UndirectedEdge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return NeighborGraph::from_edges(n, e, KnnParams{});
}

PathResult path_of(std::vector<NodeId> nodes) { return PathResult{true, std::move(nodes), 0.0}; }

}  // namespace

TEST(PairSampling, OnlyPairExists) {
  LabelVector l{{1, 1, 1, 0, 1, 1, 1, 0}, 2, LabelKind::data};
  EXPECT_EQ(sample_pairs(l, 0, 5, 42), (std::vector<NodePair>{{3, 7}}));
}

TEST(PairSampling, AllPairsWhenFewer) {
  LabelVector l{{0, 0, 0, 0}, 1, LabelKind::data};
  const auto p = sample_pairs(l, 0, 6, 1);
  EXPECT_EQ(p.size(), 6u);
  EXPECT_EQ(std::set<NodePair>(p.begin(), p.end()).size(), 6u);
}

TEST(PairSampling, SingletonClassGivesNothing) {
  LabelVector l{{0, 1, 1}, 2, LabelKind::data};
  EXPECT_TRUE(sample_pairs(l, 0, 10, 0).empty());
}

TEST(PairSampling, DeterministicDistinctInClass) {
  const auto l = random_labels(300, 3, 9);
  const auto a = sample_pairs(l, 1, 50, 77);
  EXPECT_EQ(a, sample_pairs(l, 1, 50, 77));
  EXPECT_NE(a, sample_pairs(l, 1, 50, 78));
  ASSERT_EQ(a.size(), 50u);
  EXPECT_EQ(std::set<NodePair>(a.begin(), a.end()).size(), 50u);
  for (const auto& p : a) {
    EXPECT_LT(p.first, p.second);
    EXPECT_EQ(l[p.first], 1u);
    EXPECT_EQ(l[p.second], 1u);
  }
}

TEST(PairSampling, RoughlyUniform) {
  // 10 points, 45 pairs, draw 20 per seed; every pair should turn up about
  // 20/45 of the time.
  LabelVector l{std::vector<ClassId>(10, 0), 1, LabelKind::data};
  std::map<NodePair, int> hits;
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) {
    for (const auto& p : sample_pairs(l, 0, 20, static_cast<std::uint64_t>(s))) ++hits[p];
  }
  ASSERT_EQ(hits.size(), 45u);
  const double expected = seeds * 20.0 / 45.0;
  for (const auto& [p, h] : hits) EXPECT_NEAR(h, expected, 5 * std::sqrt(expected));
}

TEST(PathScore, Examples) {
  const LabelVector l{{0, 0, 1, 0, 1}, 2, LabelKind::data};
  EXPECT_EQ(path_score(path_of({0, 1, 3}), l, 0), 1.0);
  // a, x, y, z, b with only y in class 0.
  EXPECT_EQ(path_score(path_of({0, 2, 1, 4, 3}), l, 0), 1.0 / 3.0);
  EXPECT_EQ(path_score(path_of({0, 3}), l, 0), 1.0);
  EXPECT_EQ(path_score(PathResult{}, l, 0), 0.0);
}

TEST(GraphConvexity, SingleClassConnected) {
  const auto g = build_knn_graph(random_points(100, 3, 1), 6);
  const auto r = graph_convexity(g, LabelVector{std::vector<ClassId>(100, 0), 1, LabelKind::data});
  ASSERT_EQ(r.classes.size(), 1u);
  EXPECT_EQ(r.classes[0].mean, 1.0);
  EXPECT_EQ(r.overall_mean, 1.0);
}

TEST(GraphConvexity, SixNodePathExhaustive) {
  // A A B A A A; class A pairs enumerate to 17/24.
  const LabelVector l{{0, 0, 1, 0, 0, 0}, 2, LabelKind::data};
  GraphConvexityParams p;
  p.n_pairs = 100;
  p.keep_pair_scores = true;
  const auto r = graph_convexity(path_graph(6), l, p);
  const auto& a = r.classes[0];
  EXPECT_EQ(a.n_pairs, 10u);
  EXPECT_DOUBLE_EQ(a.mean, 0.7083333333333334);
  EXPECT_TRUE(r.classes[1].absent);
  EXPECT_EQ(r.overall_mean, a.mean);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("class 1 has 1 point"), std::string::npos);
}

TEST(GraphConvexity, SemUsesClassSize) {
  // Class 0 = {0, 2, 3}: pairs (0,2)->0, (0,3)->1/2, (2,3)->1.
  const LabelVector l{{0, 1, 0, 0}, 2, LabelKind::data};
  const auto r = graph_convexity(path_graph(4), l);
  const auto& c = r.classes[0];
  EXPECT_EQ(c.n_pairs, 3u);
  EXPECT_DOUBLE_EQ(c.mean, 0.5);
  EXPECT_DOUBLE_EQ(c.sem, 0.5 / std::sqrt(3.0));
}

TEST(GraphConvexity, DisconnectedPairsAndExistingOnly) {
  std::vector<NeighborGraph::UndirectedEdge> e{{0, 1, 1}, {1, 2, 1}, {3, 4, 1}};
  const auto g = NeighborGraph::from_edges(5, e, KnnParams{});
  const LabelVector l{{0, 1, 0, 0, 0}, 2, LabelKind::data};
  const auto r = graph_convexity(g, l);
  const auto& c = r.classes[0];
  // (0,2)->0, (3,4)->1, four cross-component pairs -> 0.
  EXPECT_EQ(c.n_pairs, 6u);
  EXPECT_EQ(c.n_disconnected, 4u);
  EXPECT_DOUBLE_EQ(c.mean, 1.0 / 6.0);
  ASSERT_TRUE(c.existing_only_mean);
  EXPECT_DOUBLE_EQ(*c.existing_only_mean, 0.5);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(GraphConvexity, SizeMismatch) {
  EXPECT_THROW(graph_convexity(path_graph(4), LabelVector{{0, 0, 0}, 1, LabelKind::data}), InputError);
}

TEST(GraphConvexity, WorkerCountDoesNotChangeReport) {
  const auto m = random_points(600, 4, 3);
  const auto l = random_labels(600, 3, 4);
  const auto g = build_knn_graph(m, 8);
  GraphConvexityParams p;
  p.n_pairs = 400;
  p.seed = 5;
  p.keep_pair_scores = true;
  p.workers = 1;
  const auto a = to_json(graph_convexity(g, l, p)).dump();
  p.workers = 4;
  EXPECT_EQ(a, to_json(graph_convexity(g, l, p)).dump());
}

TEST(GraphConvexity, RangeAndExistingOnlyDominates) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto m = random_points(300, 3, s);
    const auto l = random_labels(300, 4, s + 100);
    const auto r = graph_convexity(build_knn_graph(m, 3, Symmetrization::intersection), l);
    for (const auto& c : r.classes) {
      EXPECT_GE(c.mean, 0.0);
      EXPECT_LE(c.mean, 1.0);
      EXPECT_LE(c.n_disconnected, c.n_pairs);
      if (c.existing_only_mean) {
        EXPECT_GE(*c.existing_only_mean, c.mean);
        if (c.n_disconnected == 0) {
          EXPECT_EQ(*c.existing_only_mean, c.mean);
        }
      }
    }
  }
}

TEST(GraphConvexity, LabelPermutationEquivariance) {
  const auto m = random_points(90, 2, 8);
  const auto l = random_labels(90, 3, 9);
  const auto g = build_knn_graph(m, 5);
  GraphConvexityParams p;
  p.n_pairs = 100000;  // exhaustive, so pair sets do not depend on the class id
  const auto r1 = graph_convexity(g, l, p);
  const std::vector<ClassId> rename{2, 0, 1};
  LabelVector l2 = l;
  for (auto& c : l2.labels) c = rename[c];
  const auto r2 = graph_convexity(g, l2, p);
  for (ClassId c = 0; c < 3; ++c) {
    EXPECT_EQ(r1.classes[c].mean, r2.classes[rename[c]].mean);
    EXPECT_EQ(r1.classes[c].sem, r2.classes[rename[c]].sem);
  }
  EXPECT_NEAR(*r1.overall_mean, *r2.overall_mean, 1e-15);
}

TEST(GraphConvexity, RandomLabelsNearOneOverC) {
  const auto m = random_points(2000, 2, 21);
  const auto l = random_labels(2000, 4, 22);
  GraphConvexityParams p;
  p.n_pairs = 1000;
  const auto r = graph_convexity(build_knn_graph(m, 10), l, p);
  EXPECT_NEAR(*r.overall_mean, 0.25, 0.03);
}

TEST(GraphConvexity, ParamsEcho) {
  const auto r = graph_convexity(path_graph(4), LabelVector{{0, 0, 0, 0}, 1, LabelKind::data}, {123, 9, 1, false});
  EXPECT_EQ(r.params["mode"], "knn");
  EXPECT_EQ(r.params["k"], 10);
  EXPECT_EQ(r.params["n_pairs"], 123);
  EXPECT_EQ(r.params["seed"], 9);
}

TEST(Subsample, CapsEachClass) {
  const auto l = random_labels(1000, 2, 4);
  const auto rows = subsample_per_class(l, 100, 1);
  EXPECT_EQ(rows.size(), 200u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
  EXPECT_EQ(rows, subsample_per_class(l, 100, 1));
  EXPECT_EQ(subsample_per_class(l, 5000, 1).size(), 1000u);
  EXPECT_THROW(subsample_per_class(l, 0, 1), InputError);
}

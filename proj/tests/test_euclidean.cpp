#include <gtest/gtest.h>

#include <cmath>

#include "lcx/error.hpp"
#include "lcx/euclidean_convexity.hpp"
#include "lcx/report.hpp"
#include "lcx/synth.hpp"
#include "test_util.hpp"

using namespace lcx;

namespace {

std::vector<float> vec(std::initializer_list<float> v) { return v; }

// Class 0 iff x > 2.6 or x < -3.6: two disjoint half-planes.
FeedforwardSpec half_planes_net() {
  FeedforwardSpec s;
  s.layers.push_back(AffineLayer{2, 2, {1, 0, -1, 0}, {-2.5, -3.5}});
  s.layers.push_back(ReluLayer{});
  s.head = LinearHead(2, 2, {1, 1, 0, 0}, {-0.1, 0});
  s.boundaries = {0, 2};
  return s;
}

LinearHead random_head(std::size_t c, std::size_t d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> w(c * d);
  for (auto& x : w) x = rng.normal();
  std::vector<double> b(c);
  for (auto& x : b) x = rng.normal();
  return LinearHead(c, d, w, b);
}

LabelVector model_labels(const EmbeddingMatrix& m, const LinearHead& h) {
  const auto l = h.classify(PointBatch::from_embeddings(m));
  return LabelVector{l, static_cast<std::uint32_t>(h.n_classes), LabelKind::model};
}

}  // namespace

TEST(Interpolate, ElevenStepsExact) {
  const auto x = vec({0, 0});
  const auto y = vec({11, 0});
  const auto p = interpolate(x, y);
  ASSERT_EQ(p.n, 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(p.row(i)[0], static_cast<double>(10 - i));
    EXPECT_EQ(p.row(i)[1], 0.0);
  }
}

TEST(Interpolate, IdenticalEndpoints) {
  const auto v = vec({1.5f, -2.25f, 7});
  const auto p = interpolate(v, v);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.row(i)[j], static_cast<double>(v[j]));
  }
}

TEST(Interpolate, SingleMidpoint) {
  const auto p = interpolate(vec({2, 4}), vec({6, -4}), InterpolationScheme{1});
  ASSERT_EQ(p.n, 1u);
  EXPECT_EQ(p.values, (std::vector<double>{4, 0}));
}

TEST(Interpolate, Errors) {
  EXPECT_THROW(interpolate(vec({1, 2}), vec({1})), InputError);
  EXPECT_THROW(interpolate(vec({1}), vec({2}), InterpolationScheme{0}), InputError);
}

TEST(EuclideanConvexity, LastLayerLinearHeadIsExactlyOne) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = random_points(400, 6, s, 3.0);
    const auto h = random_head(4, 6, s + 50);
    LinearOracle o(h);
    EuclideanConvexityParams p;
    p.n_pairs = 300;
    p.seed = s;
    const auto r = euclidean_convexity(m, model_labels(m, h), o, p);
    for (const auto& c : r.classes) {
      if (!c.absent) EXPECT_EQ(c.mean, 1.0);
    }
    EXPECT_EQ(r.overall_mean, 1.0);
  }
}

TEST(EuclideanConvexity, IdenticalPointsScoreOne) {
  EmbeddingMatrix m(5, 2, {1, 1, 1, 1, 1, 1, 9, 9, 9, 9});
  const LabelVector l{{0, 0, 0, 1, 1}, 2, LabelKind::model};
  // Class regions are irrelevant to class 0 here except at (1,1).
  LinearOracle o(LinearHead(2, 2, {-1, -1, 1, 1}, {0, -10}));
  const auto r = euclidean_convexity(m, l, o);
  EXPECT_EQ(r.classes[0].mean, 1.0);
  EXPECT_EQ(r.classes[1].mean, 1.0);
}

TEST(EuclideanConvexity, HalfPlanesPairScoresPointFour) {
  // Interpolants of (-5, 0) and (6, 0) have x = 5, 4, ..., -4; four of them
  // (5, 4, 3, -4) fall in class 0.
  EmbeddingMatrix m(3, 2, {-5, 0, 6, 0, 0, 0});
  const LabelVector l{{0, 0, 1}, 2, LabelKind::model};
  FeedforwardOracle o(half_planes_net(), 0);
  ASSERT_EQ(o.classify(PointBatch::from_embeddings(m)), l.labels);
  EuclideanConvexityParams p;
  p.keep_pair_scores = true;
  const auto r = euclidean_convexity(m, l, o, p);
  ASSERT_EQ(r.classes[0].pair_scores.size(), 1u);
  EXPECT_DOUBLE_EQ(r.classes[0].pair_scores[0], 0.4);
  EXPECT_TRUE(r.classes[1].absent);
}

TEST(EuclideanConvexity, SymmetricInEndpoints) {
  const auto net = half_planes_net();
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = vec({static_cast<float>(rng.uniform(-8, 8)), static_cast<float>(rng.uniform(-1, 1))});
    const auto y = vec({static_cast<float>(rng.uniform(-8, 8)), static_cast<float>(rng.uniform(-1, 1))});
    FeedforwardOracle o(net, 0);
    const auto a = o.classify(interpolate(x, y));
    auto b = o.classify(interpolate(y, x));
    std::reverse(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(EuclideanConvexity, WorkerCountAndBatchSizeDoNotMatter) {
  const auto ds = split_lobes(300, 2.0, 1);
  const auto spec = strip_oracle_spec();
  EuclideanConvexityParams p;
  p.n_pairs = 500;
  p.keep_pair_scores = true;
  p.workers = 1;
  FeedforwardOracle o(spec, 0);
  const auto a = to_json(euclidean_convexity(ds.embeddings, ds.labels, o, p)).dump();
  p.workers = 4;
  p.pairs_per_batch = 37;
  EXPECT_EQ(a, to_json(euclidean_convexity(ds.embeddings, ds.labels, o, p)).dump());
}

TEST(EuclideanConvexity, WidthMismatch) {
  LinearOracle o(LinearHead(2, 3, {1, 0, 0, 0, 1, 0}));
  EmbeddingMatrix m(2, 2, {0, 0, 1, 1});
  EXPECT_THROW(euclidean_convexity(m, LabelVector{{0, 0}, 2, LabelKind::model}, o), InputError);
}

TEST(EuclideanConvexity, OracleFailureTruncates) {
  const auto m = random_points(200, 2, 4);
  const LabelVector l{std::vector<ClassId>(200, 0), 2, LabelKind::model};
  SubprocessOracle o(std::string(LCX_ORACLE_DOUBLE) + " die-after 2", 2);
  EuclideanConvexityParams p;
  p.n_pairs = 100;
  p.pairs_per_batch = 10;
  const auto r = euclidean_convexity(m, l, o, p);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.error.rfind("batch 2:", 0), 0u) << r.error;
  EXPECT_EQ(r.classes[0].n_pairs, 20u);
  // zeros-style answers are label 0, so the completed pairs all score 1.
  EXPECT_EQ(r.classes[0].mean, 1.0);
}

TEST(EuclideanConvexity, SamePairsAsGraphMeasure) {
  const auto m = random_points(120, 2, 6);
  const auto l = random_labels(120, 2, 7);
  const LabelVector ml{l.labels, 2, LabelKind::model};
  FunctionOracle o(2, 2, [](const PointBatch& b) { return std::vector<ClassId>(b.n, 0); });
  EuclideanConvexityParams ep;
  ep.n_pairs = 50;
  ep.seed = 3;
  ep.keep_pair_scores = true;
  const auto r = euclidean_convexity(m, ml, o, ep);
  for (ClassId c = 0; c < 2; ++c) EXPECT_EQ(r.classes[c].pairs, sample_pairs(ml, c, 50, 3));
}

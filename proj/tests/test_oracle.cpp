#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lcx/error.hpp"
#include "lcx/oracle.hpp"
#include "test_util.hpp"

using namespace lcx;

namespace {

PointBatch batch(std::size_t dim, std::vector<double> v) {
  const std::size_t n = v.size() / dim;
  return PointBatch(n, dim, std::move(v));
}

// XOR on the unit square: h = relu(x + y), relu(x + y - 1); class 1 iff
// h1 - 2 h2 > 0.5.
FeedforwardSpec xor_net() {
  FeedforwardSpec s;
  s.layers.push_back(AffineLayer{2, 2, {1, 1, 1, 1}, {0, -1}});
  s.layers.push_back(ReluLayer{});
  s.head = LinearHead(2, 2, {0, 0, 1, -2}, {0.5, 0});
  s.boundaries = {0, 2};
  return s;
}

// 2-3-2 relu net used for a hand-checked forward pass.
FeedforwardSpec small_net() {
  FeedforwardSpec s;
  s.layers.push_back(AffineLayer{3, 2, {1, 0, 0, 1, 1, 1}, {0, -1, 0.5}});
  s.layers.push_back(ReluLayer{});
  s.head = LinearHead(2, 3, {1, 0, 0, 0, 1, 1}, {0, 0.25});
  s.boundaries = {0, 1, 2};
  return s;
}

LinearHead random_head(std::size_t c, std::size_t d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> w(c * d);
  std::vector<double> b(c);
  for (auto& x : w) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  return LinearHead(c, d, w, b);
}

PointBatch random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  PointBatch p(n, d);
  for (auto& x : p.values) x = rng.normal() * 2;
  return p;
}

std::string oracle_double(const std::string& args) { return std::string(LCX_ORACLE_DOUBLE) + " " + args; }

}  // namespace

TEST(LinearHead, IdentityArgmax) {
  LinearHead h(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(h.classify(batch(2, {2, 0, 0, 3})), (std::vector<ClassId>{0, 1}));
}

TEST(LinearHead, TieGoesToSmallerClass) {
  LinearHead h(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(h.classify(batch(2, {1, 1})), (std::vector<ClassId>{0}));
  EXPECT_EQ(argmax(std::vector<double>{3, 5, 5, 1}), 1u);
}

TEST(LinearHead, Validation) {
  EXPECT_THROW(LinearHead(1, 2, {1, 1}).validate(), InputError);
  EXPECT_THROW(LinearHead(2, 2, {1, 1, 1}).validate(), InputError);
  EXPECT_THROW(LinearHead(2, 1, {1, std::nan("")}).validate(), InputError);
  LinearOracle o(LinearHead(2, 2, {1, 0, 0, 1}));
  EXPECT_THROW(o.classify(batch(3, {1, 2, 3})), InputError);
}

TEST(LinearHead, SoftmaxIsRedundant) {
  const auto h = random_head(5, 4, 1);
  const auto p = random_batch(500, 4, 2);
  const auto s = h.scores(p);
  const auto labels = h.classify(p);
  for (std::size_t i = 0; i < p.n; ++i) {
    const auto row = s.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    std::vector<double> prob(row.size());
    double z = 0;
    for (std::size_t k = 0; k < row.size(); ++k) z += prob[k] = std::exp(row[k] - mx);
    for (auto& v : prob) v /= z;
    EXPECT_EQ(argmax(prob), labels[i]);
  }
}

TEST(LinearHead, AffineInvarianceOnMarginSeparatedPoints) {
  // f(x) = A x + b with A = H diag(s), H a Householder reflection.
  const std::size_t d = 4;
  const auto h = random_head(3, d, 7);
  const auto x = random_batch(2000, d, 8);
  SplitMix64 rng(9);
  std::vector<double> v(d), s(d), b(d);
  double vv = 0;
  for (std::size_t i = 0; i < d; ++i) {
    v[i] = rng.normal();
    vv += v[i] * v[i];
    s[i] = rng.uniform(0.5, 2.0);
    b[i] = rng.normal();
  }
  auto H = [&](std::size_t i, std::size_t j) { return (i == j ? 1.0 : 0.0) - 2 * v[i] * v[j] / vv; };
  // A^-1 = diag(1/s) H, so W A^-1 = (W diag(1/s)) H.
  std::vector<double> wt(3 * d, 0.0);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) wt[k * d + i] += h.weights[k * d + j] / s[j] * H(j, i);
  std::vector<double> bt = h.bias;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < d; ++i) bt[k] -= wt[k * d + i] * b[i];
  const LinearHead moved(3, d, wt, bt);

  PointBatch fx(x.n, d);
  for (std::size_t p = 0; p < x.n; ++p)
    for (std::size_t i = 0; i < d; ++i) {
      double acc = b[i];
      for (std::size_t j = 0; j < d; ++j) acc += H(i, j) * s[j] * x.row(p)[j];
      fx.row(p)[i] = acc;
    }
  const auto sc = h.scores(x);
  const auto l1 = h.classify(x);
  const auto l2 = moved.classify(fx);
  std::size_t checked = 0;
  for (std::size_t p = 0; p < x.n; ++p) {
    auto row = std::vector<double>(sc.row(p).begin(), sc.row(p).end());
    std::sort(row.rbegin(), row.rend());
    if (row[0] - row[1] <= 1e-4) continue;
    ++checked;
    EXPECT_EQ(l1[p], l2[p]) << "point " << p;
  }
  EXPECT_GT(checked, 1900u);
}

TEST(Feedforward, XorByHand) {
  FeedforwardOracle o(xor_net(), 0);
  EXPECT_EQ(o.classify(batch(2, {0, 0, 1, 0, 0, 1, 1, 1})), (std::vector<ClassId>{0, 1, 1, 0}));
}

TEST(Feedforward, SmallNetScoresByHand) {
  // (2, -1) -> pre-activation (2, -2, 1.5) -> relu (2, 0, 1.5) -> scores (2, 1.75).
  const auto s = forward_from(small_net(), 0, batch(2, {2, -1}));
  EXPECT_EQ(s.values, (std::vector<double>{2.0, 1.75}));
  const auto mid = forward_to(small_net(), 2, batch(2, {2, -1}));
  EXPECT_EQ(mid.values, (std::vector<double>{2, 0, 1.5}));
  EXPECT_EQ(forward_from(small_net(), 2, mid).values, s.values);
  EXPECT_EQ(forward_from(small_net(), 1, forward_to(small_net(), 1, batch(2, {2, -1}))).values, s.values);
}

TEST(Feedforward, LastBoundaryIsTheHead) {
  const auto spec = small_net();
  const auto p = random_batch(20, 3, 4);
  EXPECT_EQ(forward_from(spec, 2, p).values, spec.head.scores(p).values);
}

TEST(Feedforward, IdentityLayersChangeNothing) {
  FeedforwardSpec s;
  s.layers.push_back(AffineLayer{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}});
  s.layers.push_back(AffineLayer{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}});
  s.head = random_head(4, 3, 5);
  s.boundaries = {0, 2};
  const auto p = random_batch(30, 3, 6);
  EXPECT_EQ(forward_from(s, 0, p).values, s.head.scores(p).values);
}

TEST(Feedforward, LayerNorm) {
  FeedforwardSpec s;
  s.layers.push_back(LayerNormLayer{{1, 1}, {0, 0}, 1e-5});
  s.head = LinearHead(2, 2, {1, 0, 0, 1});
  s.boundaries = {0, 1};
  // (3, 1): mean 2, var 1 -> (1, -1) / sqrt(1 + 1e-5).
  const auto z = forward_to(s, 1, batch(2, {3, 1}));
  EXPECT_NEAR(z.values[0], 1 / std::sqrt(1 + 1e-5), 1e-15);
  EXPECT_NEAR(z.values[1], -1 / std::sqrt(1 + 1e-5), 1e-15);
}

TEST(Feedforward, WidthMismatchAndBadBoundary) {
  EXPECT_THROW(forward_from(small_net(), 0, batch(3, {1, 2, 3})), InputError);
  EXPECT_THROW(forward_from(small_net(), 3, batch(2, {1, 2})), InputError);
  EXPECT_THROW(FeedforwardOracle(small_net(), 7), InputError);
}

TEST(ModelSpec, MinimalJson) {
  const auto spec = parse_model_spec(nlohmann::json::parse(R"({
    "layers": [{"type": "affine", "rows": 2, "cols": 3, "weight": [1,0,0, 0,1,0], "bias": [0, 1]}],
    "head": {"weight": [1, 0, 0, 1], "bias": [0, 0]}
  })"));
  EXPECT_EQ(spec.layers.size(), 1u);
  EXPECT_EQ(spec.head.n_classes, 2u);
  EXPECT_EQ(spec.width_at(0), 3u);
  EXPECT_EQ(spec.width_at(1), 2u);
  EXPECT_EQ(spec.boundaries, (std::vector<std::size_t>{1}));
}

TEST(ModelSpec, ShapeErrorNamesBothLayers) {
  // Layer 0 maps 4 -> 3; layer 1 wants 4 inputs.
  const auto doc = nlohmann::json::parse(R"({
    "layers": [{"type": "affine", "rows": 3, "cols": 4, "weight": [0,0,0,0, 0,0,0,0, 0,0,0,0]},
               {"type": "affine", "rows": 5, "cols": 4, "weight": [0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0]}],
    "head": {"rows": 2, "weight": [0,0,0,0,0, 0,0,0,0,0]}
  })");
  try {
    parse_model_spec(doc);
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("layer 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
  }
}

TEST(ModelSpec, UnknownLayerType) {
  const auto doc = nlohmann::json::parse(R"({"layers": [{"type": "conv"}], "head": {"rows": 2, "weight": [1, 0]}})");
  EXPECT_THROW(parse_model_spec(doc), FormatError);
}

TEST(ModelSpec, RoundTrip) {
  TempDir dir;
  auto spec = small_net();
  spec.layers.push_back(LayerNormLayer{{1, 2, 3}, {0.5, 0, -1}, 1e-3});
  spec.boundaries = {0, 1, 2, 3};
  spec.validate();
  save_model_spec(spec, dir.path / "m.json");
  EXPECT_EQ(load_model_spec(dir.path / "m.json"), spec);
  save_linear_head(spec.head, dir.path / "h.json");
  EXPECT_EQ(load_linear_head(dir.path / "h.json"), spec.head);
}

TEST(Protocol, RequestAndReply) {
  EXPECT_EQ(encode_oracle_request(3, batch(2, {0.1, -2, 1e300, 0})), R"({"id":3,"points":[[0.1,-2.0],[1e+300,0.0]]})");
  EXPECT_EQ(decode_oracle_reply(R"({"id":3,"labels":[1,0]})", 3, 2), (std::vector<ClassId>{1, 0}));
  EXPECT_THROW(decode_oracle_reply(R"({"id":4,"labels":[1,0]})", 3, 2), OracleError);
  EXPECT_THROW(decode_oracle_reply(R"({"id":3,"labels":[1]})", 3, 2), OracleError);
  EXPECT_THROW(decode_oracle_reply(R"({"id":3,"labels":[1,-1]})", 3, 2), OracleError);
  EXPECT_THROW(decode_oracle_reply("nope", 3, 2), OracleError);
  EXPECT_THROW(decode_oracle_reply(R"({"id":3,"error":"boom"})", 3, 2), OracleError);
}

TEST(Subprocess, ZerosDouble) {
  SubprocessOracle o(oracle_double("zeros"), 2);
  EXPECT_EQ(o.classify(batch(2, {1, 2, 3, 4, 5, 6})), (std::vector<ClassId>{0, 0, 0}));
  EXPECT_EQ(o.classify(batch(2, {1, 2})), (std::vector<ClassId>{0}));
  EXPECT_EQ(o.batches_sent(), 2u);
}

TEST(Subprocess, WrongLengthIsProtocolError) {
  SubprocessOracle o(oracle_double("short"), 2);
  EXPECT_THROW(o.classify(batch(2, {1, 2, 3, 4})), OracleError);
  // The handle stays dead afterwards.
  EXPECT_THROW(o.classify(batch(2, {1, 2, 3, 4})), OracleError);
}

TEST(Subprocess, MalformedAndMismatchedReplies) {
  for (const char* mode : {"garbage", "bad-id", "error"}) {
    SubprocessOracle o(oracle_double(mode), 2);
    EXPECT_THROW(o.classify(batch(2, {1, 2})), OracleError) << mode;
  }
}

TEST(Subprocess, LinearHeadDifferential) {
  TempDir dir;
  const auto h = random_head(4, 5, 11);
  save_linear_head(h, dir.path / "head.json");
  SubprocessOracle o(oracle_double("linear " + (dir.path / "head.json").string()), 5);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_batch(700, 5, s);
    EXPECT_EQ(o.classify(p), h.classify(p));
  }
}

TEST(Subprocess, ProcessExitReported) {
  SubprocessOracle o(oracle_double("die-after 1"), 2);
  EXPECT_NO_THROW(o.classify(batch(2, {1, 2})));
  try {
    o.classify(batch(2, {1, 2}));
    FAIL();
  } catch (const OracleError& e) {
    ASSERT_TRUE(e.batch());
    EXPECT_EQ(*e.batch(), 1u);
  }
}

TEST(Subprocess, Timeout) {
  SubprocessOracle o(oracle_double("sleep"), 2, std::chrono::milliseconds(300));
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(o.classify(batch(2, {1, 2})), OracleError);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
}

TEST(Subprocess, MissingCommand) {
  SubprocessOracle o("/nonexistent/oracle-binary", 2);
  EXPECT_THROW(o.classify(batch(2, {1, 2})), OracleError);
}

TEST(FunctionOracle, WrongLength) {
  FunctionOracle o(2, 2, [](const PointBatch&) { return std::vector<ClassId>{0}; });
  EXPECT_THROW(o.classify(batch(2, {1, 2, 3, 4})), OracleError);
}

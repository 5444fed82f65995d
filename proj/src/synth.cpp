#include "lcx/synth.hpp"

#include <cmath>
#include <numbers>

#include "lcx/error.hpp"
#include "lcx/graph_convexity.hpp"
#include "lcx/neighbor_graph.hpp"
#include "lcx/rng.hpp"

namespace lcx {

namespace {

constexpr std::uint64_t kBlobStream = 0x626c6f62ULL;
constexpr std::uint64_t kCrescentStream = 0x63726573ULL;
constexpr std::uint64_t kLobeStream = 0x6c6f6265ULL;
constexpr std::uint64_t kAnnulusStream = 0x616e6e75ULL;

constexpr double kLobeLength = 3.0;
constexpr double kOuterHalfHeight = 2.5;

struct Builder {
  std::size_t dim;
  std::vector<float> values;
  std::vector<ClassId> labels;

  void add(std::initializer_list<double> point, ClassId label) {
    for (double v : point) values.push_back(static_cast<float>(v));
    labels.push_back(label);
  }

  Dataset finish(std::uint32_t n_classes, std::string name) {
    Dataset d;
    const std::size_t n = labels.size();
    d.embeddings = EmbeddingMatrix(n, dim, std::move(values), 0, std::move(name));
    d.labels.labels = std::move(labels);
    d.labels.n_classes = n_classes;
    d.labels.kind = LabelKind::data;
    return d;
  }
};

}  // namespace

Dataset gaussian_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double separation,
                       double sigma, std::uint64_t seed) {
  if (n_classes < 1) throw InputError("blobs need at least one class");
  if (dim < 1) throw InputError("blobs need dim >= 1");
  if (sigma < 0.0) throw InputError("sigma must be non-negative");
  Dataset d;
  std::vector<float> values;
  values.reserve(n_classes * n_per_class * dim);
  std::vector<ClassId> labels;
  for (std::size_t c = 0; c < n_classes; ++c) {
    SplitMix64 rng(derive_seed(seed, kBlobStream, c));
    std::vector<double> center(dim, 0.0);
    center[c % dim] = separation * static_cast<double>(1 + c / dim);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t j = 0; j < dim; ++j) values.push_back(static_cast<float>(center[j] + sigma * rng.normal()));
      labels.push_back(static_cast<ClassId>(c));
    }
  }
  d.embeddings = EmbeddingMatrix(labels.size(), dim, std::move(values), 0, "blobs");
  d.labels.labels = std::move(labels);
  d.labels.n_classes = static_cast<std::uint32_t>(n_classes);
  return d;
}

Dataset crescent_pair(std::size_t n, double gap, double sigma, std::uint64_t seed) {
  if (n < 20) throw InputError("crescent fixture needs n >= 20");
  if (sigma < 0.0) throw InputError("sigma must be non-negative");
  Builder b{2, {}, {}};
  SplitMix64 arc(derive_seed(seed, kCrescentStream, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = arc.uniform(std::numbers::pi / 4.0, 7.0 * std::numbers::pi / 4.0);
    b.add({std::cos(theta) + sigma * arc.normal(), std::sin(theta) + sigma * arc.normal()}, 0);
  }
  SplitMix64 blob(derive_seed(seed, kCrescentStream, 1));
  for (std::size_t i = 0; i < n; ++i) {
    b.add({gap + kCrescentBlobSigma * blob.normal(), kCrescentBlobSigma * blob.normal()}, 1);
  }
  return b.finish(2, "crescent");
}

Dataset split_lobes(std::size_t n, double bridge_width, std::uint64_t seed, std::size_t lobes) {
  if (n < 20) throw InputError("split-lobes fixture needs n >= 20");
  if (bridge_width < 0.0) throw InputError("bridge width must be non-negative");
  if (lobes != 1 && lobes != 2) throw InputError("split-lobes supports 1 or 2 lobes");

  // Lobe x-intervals; a single lobe sits at the origin.
  std::vector<std::pair<double, double>> spans;
  if (lobes == 1) {
    spans.push_back({-kLobeLength / 2.0, kLobeLength / 2.0});
  } else {
    spans.push_back({-bridge_width / 2.0 - kLobeLength, -bridge_width / 2.0});
    spans.push_back({bridge_width / 2.0, bridge_width / 2.0 + kLobeLength});
  }
  const double x_max = spans.back().second + 1.0;
  auto in_lobe = [&](double x, double y) {
    if (std::abs(y) > kLobeHalfHeight) return false;
    for (const auto& [lo, hi] : spans) {
      if (x >= lo && x <= hi) return true;
    }
    return false;
  };

  const double lobe_area = static_cast<double>(lobes) * kLobeLength * 2.0 * kLobeHalfHeight;
  const double outer_area = 2.0 * x_max * 2.0 * kOuterHalfHeight - lobe_area;
  const auto n_other = static_cast<std::size_t>(std::llround(static_cast<double>(n) * outer_area / lobe_area));

  Builder b{2, {}, {}};
  SplitMix64 inner(derive_seed(seed, kLobeStream, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [lo, hi] = spans[i % spans.size()];
    b.add({inner.uniform(lo, hi), inner.uniform(-kLobeHalfHeight, kLobeHalfHeight)}, 0);
  }
  SplitMix64 outer(derive_seed(seed, kLobeStream, 1));
  for (std::size_t i = 0; i < n_other;) {
    const double x = outer.uniform(-x_max, x_max);
    const double y = outer.uniform(-kOuterHalfHeight, kOuterHalfHeight);
    if (in_lobe(x, y)) continue;
    b.add({x, y}, 1);
    ++i;
  }
  return b.finish(2, "split-lobes");
}

FeedforwardSpec strip_oracle_spec(double half_width) {
  FeedforwardSpec spec;
  spec.layers.emplace_back(AffineLayer{2, 2, {0.0, 1.0, 0.0, -1.0}, {-half_width, -half_width}});
  spec.layers.emplace_back(ReluLayer{});
  spec.head = LinearHead(2, 2, {0.0, 0.0, 1.0, 1.0}, {0.0, 0.0});
  spec.boundaries = {0, 2};
  spec.validate();
  return spec;
}

NearestNeighborOracle::NearestNeighborOracle(EmbeddingMatrix reference, LabelVector labels)
    : reference_(std::move(reference)), labels_(std::move(labels)) {
  if (reference_.n_points == 0) throw InputError("nearest-neighbor oracle needs reference points");
  if (reference_.n_points != labels_.size()) throw InputError("reference points and labels differ in count");
}

std::vector<ClassId> NearestNeighborOracle::classify(const PointBatch& points) {
  if (points.dim != reference_.dim) {
    throw InputError("oracle expects points of width " + std::to_string(reference_.dim) + ", got " +
                     std::to_string(points.dim));
  }
  std::vector<ClassId> out(points.n);
  for (std::size_t i = 0; i < points.n; ++i) {
    const auto q = points.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_id = 0;
    for (std::size_t r = 0; r < reference_.n_points; ++r) {
      const auto p = reference_.row(r);
      double d = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        const double diff = q[j] - static_cast<double>(p[j]);
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_id = r;
      }
    }
    out[i] = labels_[best_id];
  }
  return out;
}

nlohmann::ordered_json NearestNeighborOracle::describe() const {
  return {{"kind", "nearest-neighbor"}, {"n_reference", reference_.n_points}, {"input_dim", reference_.dim}};
}

AnnulusFixture annulus_geodesic_fixture(std::size_t n, double r, double sigma, std::uint64_t seed) {
  if (n < 100) throw InputError("annulus fixture needs n >= 100");
  if (!(r > 0.0)) throw InputError("annulus radius must be positive");
  if (sigma < 0.0) throw InputError("sigma must be non-negative");
  const double pi = std::numbers::pi;
  const double small = pi / static_cast<double>(n);
  std::vector<float> values;
  values.reserve(2 * n);
  auto put = [&](double radius, double theta) {
    values.push_back(static_cast<float>(radius * std::cos(theta)));
    values.push_back(static_cast<float>(radius * std::sin(theta)));
  };
  put(r, 0.0);
  put(r, pi);
  put(r, small);
  SplitMix64 rng(derive_seed(seed, kAnnulusStream));
  for (std::size_t i = 3; i < n; ++i) {
    const double theta = rng.uniform(0.0, 2.0 * pi);
    put(r + sigma * rng.normal(), theta);
  }
  AnnulusFixture f;
  f.embeddings = EmbeddingMatrix(n, 2, std::move(values), 0, "annulus");
  f.radius = r;
  f.marked = {{0, 1, r * pi}, {0, 2, r * small}};
  return f;
}

Dataset generate(const SynthConfig& c) {
  if (c.generator == "blobs") return gaussian_blobs(c.n_classes, c.n, c.dim, c.separation, c.sigma, c.seed);
  if (c.generator == "crescent") return crescent_pair(c.n, c.gap, c.sigma, c.seed);
  if (c.generator == "split-lobes") return split_lobes(c.n, c.bridge_width, c.seed, c.lobes);
  if (c.generator == "annulus") {
    auto f = annulus_geodesic_fixture(c.n, c.radius, c.sigma, c.seed);
    Dataset d;
    d.labels.labels.assign(f.embeddings.n_points, 0);
    d.labels.n_classes = 1;
    d.embeddings = std::move(f.embeddings);
    return d;
  }
  throw InputError("unknown generator \"" + c.generator + "\" (expected blobs, crescent, split-lobes or annulus)");
}

nlohmann::ordered_json synth_config_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["generator"] = c.generator;
  j["n"] = c.n;
  j["seed"] = c.seed;
  if (c.generator == "blobs") {
    j["n_classes"] = c.n_classes;
    j["dim"] = c.dim;
    j["separation"] = c.separation;
    j["sigma"] = c.sigma;
  } else if (c.generator == "crescent") {
    j["gap"] = c.gap;
    j["sigma"] = c.sigma;
  } else if (c.generator == "split-lobes") {
    j["bridge_width"] = c.bridge_width;
    j["lobes"] = c.lobes;
  } else if (c.generator == "annulus") {
    j["radius"] = c.radius;
    j["sigma"] = c.sigma;
  }
  return j;
}

std::vector<SweepRow> regime_sweep(const SynthConfig& base, std::span<const std::size_t> ns,
                                   std::span<const std::size_t> ks, std::size_t n_pairs, std::uint64_t seed,
                                   std::size_t workers) {
  if (ns.empty() || ks.empty()) throw InputError("regime sweep needs at least one n and one k");
  std::vector<SweepRow> rows;
  for (std::size_t n : ns) {
    SynthConfig cfg = base;
    cfg.n = n;
    const Dataset d = generate(cfg);
    for (std::size_t k : ks) {
      if (k >= d.embeddings.n_points) {
        throw InputError("k = " + std::to_string(k) + " needs more than " + std::to_string(d.embeddings.n_points) +
                         " points");
      }
      const NeighborGraph g = build_knn_graph(d.embeddings, k, Symmetrization::union_, workers);
      GraphConvexityParams gp;
      gp.n_pairs = n_pairs;
      gp.seed = seed;
      gp.workers = workers;
      const auto report = graph_convexity(g, d.labels, gp);
      const auto stats = graph_stats(g, d.labels, n_pairs, seed);
      SweepRow row;
      row.n = n;
      row.k = k;
      row.convexity = report.overall_mean.value_or(0.0);
      row.existing_only = report.overall_existing_only_mean.value_or(0.0);
      double exists = 0.0;
      for (const auto& p : stats.path_exists) exists += p.fraction;
      row.path_exists = stats.path_exists.empty() ? 0.0 : exists / static_cast<double>(stats.path_exists.size());
      row.n_components = stats.n_components;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace lcx

#include "lcx/euclidean_convexity.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>

#include "convexity_common.hpp"
#include "lcx/error.hpp"
#include "lcx/parallel.hpp"

namespace lcx {

PointBatch interpolate(std::span<const float> x, std::span<const float> y, const InterpolationScheme& scheme) {
  if (x.size() != y.size()) {
    throw InputError("cannot interpolate points of width " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
  if (scheme.n_points == 0) throw InputError("interpolation needs at least one point");
  const std::size_t steps = scheme.n_points + 1;
  PointBatch out(scheme.n_points, x.size());
  for (std::size_t i = 1; i <= scheme.n_points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    const double s = static_cast<double>(steps - i) / static_cast<double>(steps);
    auto row = out.row(i - 1);
    for (std::size_t j = 0; j < x.size(); ++j) {
      row[j] = t * static_cast<double>(x[j]) + s * static_cast<double>(y[j]);
    }
  }
  return out;
}

namespace {

struct Batch {
  ClassId cls;
  std::size_t first_pair;
  std::size_t n_pairs;
};

}  // namespace

LayerConvexityReport euclidean_convexity(const EmbeddingMatrix& emb, const LabelVector& labels,
                                         ClassifierOracle& oracle, const EuclideanConvexityParams& params) {
  if (emb.n_points != labels.size()) {
    throw InputError("embedding has " + std::to_string(emb.n_points) + " points but there are " +
                     std::to_string(labels.size()) + " labels");
  }
  if (oracle.input_dim() != emb.dim) {
    throw InputError("oracle expects width " + std::to_string(oracle.input_dim()) + " but layer " +
                     std::to_string(emb.layer_id) + " has width " + std::to_string(emb.dim));
  }
  if (params.scheme.n_points == 0) throw InputError("N_p must be at least 1");
  if (params.pairs_per_batch == 0) throw InputError("pairs per batch must be at least 1");

  LayerConvexityReport report;
  report.metric = "euclidean";
  report.layer_id = emb.layer_id;
  report.layer_name = emb.name;
  report.params["n_interpolants"] = params.scheme.n_points;
  report.params["interpolation"] = "interior";
  report.params["n_pairs"] = params.n_pairs;
  report.params["seed"] = params.seed;
  report.params["oracle"] = oracle.describe();

  const auto sizes = labels.class_sizes();
  std::vector<std::vector<NodePair>> pairs(labels.n_classes);
  std::vector<Batch> batches;
  for (ClassId c = 0; c < labels.n_classes; ++c) {
    if (sizes[c] < 2) continue;
    pairs[c] = sample_pairs_from(labels.members(c), c, params.n_pairs, params.seed);
    for (std::size_t p = 0; p < pairs[c].size(); p += params.pairs_per_batch) {
      batches.push_back({c, p, std::min(params.pairs_per_batch, pairs[c].size() - p)});
    }
  }

  std::vector<std::vector<double>> scores(labels.n_classes);
  for (ClassId c = 0; c < labels.n_classes; ++c) scores[c].assign(pairs[c].size(), 0.0);

  const std::size_t np = params.scheme.n_points;
  std::atomic<std::size_t> first_failure{std::numeric_limits<std::size_t>::max()};
  std::mutex failure_mutex;
  std::string failure_message;

  std::size_t workers = resolve_workers(params.workers);
  if (oracle.max_concurrency() > 0) workers = std::min(workers, oracle.max_concurrency());

  parallel_for(batches.size(), workers, [&](std::size_t b) {
    if (b > first_failure.load()) return;
    const Batch& batch = batches[b];
    PointBatch points(batch.n_pairs * np, emb.dim);
    for (std::size_t p = 0; p < batch.n_pairs; ++p) {
      const NodePair& pr = pairs[batch.cls][batch.first_pair + p];
      const PointBatch seg = interpolate(emb.row(pr.first), emb.row(pr.second), params.scheme);
      std::copy(seg.values.begin(), seg.values.end(), points.values.begin() + p * np * emb.dim);
    }
    std::vector<ClassId> predicted;
    try {
      predicted = oracle.classify(points);
      if (predicted.size() != points.n) {
        throw OracleError("oracle returned " + std::to_string(predicted.size()) + " labels for " +
                          std::to_string(points.n) + " points");
      }
    } catch (const OracleError& e) {
      std::lock_guard lock(failure_mutex);
      if (b < first_failure.load()) {
        first_failure = b;
        failure_message = e.what();
      }
      return;
    }
    for (std::size_t p = 0; p < batch.n_pairs; ++p) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < np; ++i) hits += predicted[p * np + i] == batch.cls;
      scores[batch.cls][batch.first_pair + p] = static_cast<double>(hits) / static_cast<double>(np);
    }
  });

  // Pairs scored before the first failing batch, per class.
  std::vector<std::size_t> completed(labels.n_classes, 0);
  for (ClassId c = 0; c < labels.n_classes; ++c) completed[c] = pairs[c].size();
  const std::size_t fail = first_failure.load();
  if (fail != std::numeric_limits<std::size_t>::max()) {
    report.truncated = true;
    report.error = "batch " + std::to_string(fail) + ": " + failure_message;
    report.warnings.push_back("oracle failed at batch " + std::to_string(fail) + "; report is truncated");
    for (ClassId c = 0; c < labels.n_classes; ++c) completed[c] = 0;
    for (std::size_t b = 0; b < fail; ++b) completed[batches[b].cls] += batches[b].n_pairs;
  }

  for (ClassId c = 0; c < labels.n_classes; ++c) {
    if (sizes[c] < 2) {
      report.classes.push_back(detail::absent_class(c, sizes[c], report));
      continue;
    }
    ClassConvexity cc;
    cc.class_id = c;
    cc.n_class = sizes[c];
    scores[c].resize(completed[c]);
    pairs[c].resize(completed[c]);
    detail::summarize(cc, scores[c]);
    if (params.keep_pair_scores) {
      cc.pairs = std::move(pairs[c]);
      cc.pair_scores = std::move(scores[c]);
    }
    report.classes.push_back(std::move(cc));
  }
  detail::finish_report(report);
  return report;
}

}  // namespace lcx

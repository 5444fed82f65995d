#include "lcx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "lcx/error.hpp"
#include "lcx/neighbor_graph.hpp"
#include "lcx/rng.hpp"

namespace lcx {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double sem(std::span<const double> scores, std::size_t n_class) {
  if (scores.empty()) throw InputError("sem of an empty score list");
  if (n_class == 0) throw InputError("sem with n_class = 0");
  if (scores.size() == 1) return 0.0;
  const double m = mean_of(scores);
  double ss = 0.0;
  for (double x : scores) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  return sd / std::sqrt(static_cast<double>(n_class));
}

LabelVector permute_labels(const LabelVector& labels, std::uint64_t seed, std::size_t repeat) {
  LabelVector out = labels;
  SplitMix64 rng(derive_seed(seed, 0x62617365ULL, repeat));
  auto& v = out.labels;
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
  return out;
}

BaselineResult random_baseline(const ScoreFn& score_fn, const LabelVector& labels, std::uint64_t seed,
                               std::size_t n_repeats) {
  if (n_repeats == 0) throw InputError("random baseline needs at least one repeat");
  BaselineResult out;
  out.n_repeats = n_repeats;
  for (std::size_t r = 0; r < n_repeats; ++r) out.repeat_means.push_back(score_fn(permute_labels(labels, seed, r)));
  out.grand_mean = mean_of(out.repeat_means);
  out.grand_sem = sem(out.repeat_means, n_repeats);
  std::size_t non_empty = 0;
  for (std::size_t s : labels.class_sizes()) non_empty += s > 0;
  out.reference = non_empty ? 1.0 / static_cast<double>(non_empty) : 0.0;
  return out;
}

double skewness(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : values) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(values.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

HubnessReport hubness_from_occurrence(std::vector<std::uint32_t> occ, std::size_t k) {
  HubnessReport out;
  out.k = k;
  const std::size_t n = occ.size();
  std::vector<double> as_double(occ.begin(), occ.end());
  out.k_skewness = skewness(as_double);
  double dev = 0.0;
  for (std::uint32_t o : occ) dev += std::abs(static_cast<double>(o) - static_cast<double>(k));
  out.robinhood = n ? dev / (2.0 * static_cast<double>(n) * static_cast<double>(k)) : 0.0;
  out.k_occurrence = std::move(occ);
  return out;
}

HubnessReport hubness(const EmbeddingMatrix& emb, std::size_t k, std::size_t workers) {
  if (k < 1 || k >= emb.n_points) {
    throw InputError("hubness k = " + std::to_string(k) + " out of range [1, " + std::to_string(emb.n_points) + ")");
  }
  const KnnTable table = knn_table(emb, k, workers);
  std::vector<std::uint32_t> occ(emb.n_points, 0);
  for (NodeId id : table.ids) ++occ[id];
  return hubness_from_occurrence(std::move(occ), k);
}

CorrelationResult pearson_fisher(std::span<const double> x, std::span<const double> y, double alpha) {
  if (x.size() != y.size()) {
    throw InputError("correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 4) throw InputError("correlation needs at least 4 points, got " + std::to_string(x.size()));
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw InputError("correlation input has zero variance");

  CorrelationResult out;
  out.n = x.size();
  out.alpha = alpha;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double z = std::atanh(out.r);
  const double q = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
  const double half = q / std::sqrt(static_cast<double>(out.n) - 3.0);
  out.ci_low = std::tanh(z - half);
  out.ci_high = std::tanh(z + half);
  return out;
}

}  // namespace lcx

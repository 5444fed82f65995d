#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lcx/core_data.hpp"

namespace lcx {

/// Sample standard deviation of `scores` (denominator length - 1, zero for a
/// single score) divided by sqrt(n_class).
double sem(std::span<const double> scores, std::size_t n_class);

struct BaselineResult {
  std::size_t n_repeats = 0;
  std::vector<double> repeat_means;
  double grand_mean = 0.0;
  double grand_sem = 0.0;  // std of repeat means / sqrt(n_repeats)
  double reference = 0.0;  // 1 / (number of non-empty classes)
};

/// Overall score of one labelling; the baseline calls it once per repeat.
using ScoreFn = std::function<double(const LabelVector&)>;

/// Label array shuffled by Fisher-Yates with a stream derived from
/// (seed, repeat). Class sizes are preserved.
LabelVector permute_labels(const LabelVector& labels, std::uint64_t seed, std::size_t repeat);

/// Repeats are evaluated in order; parallelism lives inside score_fn.
BaselineResult random_baseline(const ScoreFn& score_fn, const LabelVector& labels, std::uint64_t seed,
                               std::size_t n_repeats);

struct HubnessReport {
  std::size_t k = 0;
  std::vector<std::uint32_t> k_occurrence;
  double k_skewness = 0.0;
  double robinhood = 0.0;
};

/// k-occurrence over the directed k-nearest-neighbor relation.
HubnessReport hubness(const EmbeddingMatrix& emb, std::size_t k, std::size_t workers = 0);
/// Same, from precomputed occurrence counts (their sum must be N * k).
HubnessReport hubness_from_occurrence(std::vector<std::uint32_t> k_occurrence, std::size_t k);

/// Fisher-Pearson moment skewness g1; zero for zero variance.
double skewness(std::span<const double> values);

struct CorrelationResult {
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  double alpha = 0.05;
};

/// Pearson r with the Fisher-transform confidence interval
/// tanh(atanh(r) +- z_{1 - alpha/2} / sqrt(n - 3)).
CorrelationResult pearson_fisher(std::span<const double> x, std::span<const double> y, double alpha = 0.05);

}  // namespace lcx

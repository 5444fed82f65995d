#pragma once

#include <span>
#include <string>

#include "lcx/graph_convexity.hpp"
#include "lcx/stats.hpp"

namespace lcx::detail {

inline double plain_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Fills mean/sem/n_pairs from the scores of a class that has pairs.
inline void summarize(ClassConvexity& c, std::span<const double> scores) {
  c.n_pairs = scores.size();
  if (scores.empty()) return;
  c.mean = plain_mean(scores);
  c.sem = sem(scores, c.n_class);
}

/// Overall means over present classes, and the absent-class warnings.
inline void finish_report(LayerConvexityReport& r) {
  double total = 0.0;
  std::size_t present = 0;
  double existing_total = 0.0;
  std::size_t existing_count = 0;
  for (const auto& c : r.classes) {
    if (c.absent || c.n_pairs == 0) continue;
    total += c.mean;
    ++present;
    if (c.existing_only_mean) {
      existing_total += *c.existing_only_mean;
      ++existing_count;
    }
  }
  if (present) r.overall_mean = total / static_cast<double>(present);
  if (existing_count) r.overall_existing_only_mean = existing_total / static_cast<double>(existing_count);
  if (!present) r.warnings.push_back("no class has two or more points; nothing was scored");
}

inline ClassConvexity absent_class(ClassId cls, std::size_t n_class, LayerConvexityReport& r) {
  ClassConvexity c;
  c.class_id = cls;
  c.absent = true;
  c.n_class = n_class;
  r.warnings.push_back("class " + std::to_string(cls) + " has " + std::to_string(n_class) +
                       (n_class == 1 ? " point" : " points") + "; reported as absent");
  return c;
}

}  // namespace lcx::detail

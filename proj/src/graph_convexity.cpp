#include "lcx/graph_convexity.hpp"

#include <algorithm>
#include <numeric>

#include "convexity_common.hpp"
#include "lcx/error.hpp"
#include "lcx/parallel.hpp"
#include "lcx/rng.hpp"

namespace lcx {

double path_score(const PathResult& p, const LabelVector& labels, ClassId cls) {
  if (!p.found) return 0.0;
  if (p.nodes.size() <= 2) return 1.0;
  std::size_t in_class = 0;
  for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) in_class += labels[p.nodes[i]] == cls;
  return static_cast<double>(in_class) / static_cast<double>(p.nodes.size() - 2);
}

namespace {

struct SourceTask {
  std::size_t class_slot;
  NodeId source;
  std::vector<std::size_t> pair_indices;
};

}  // namespace

LayerConvexityReport graph_convexity(const NeighborGraph& g, const LabelVector& labels,
                                     const GraphConvexityParams& params) {
  if (g.n_nodes() != labels.size()) {
    throw InputError("graph has " + std::to_string(g.n_nodes()) + " nodes but there are " +
                     std::to_string(labels.size()) + " labels");
  }
  LayerConvexityReport report;
  report.metric = "graph";
  report.params = graph_params_json(g.params());
  report.params["n_pairs"] = params.n_pairs;
  report.params["seed"] = params.seed;

  const auto sizes = labels.class_sizes();
  std::vector<std::vector<NodePair>> pairs(labels.n_classes);
  std::vector<SourceTask> tasks;
  for (ClassId c = 0; c < labels.n_classes; ++c) {
    if (sizes[c] < 2) continue;
    pairs[c] = sample_pairs_from(labels.members(c), c, params.n_pairs, params.seed);
    std::vector<std::size_t> order(pairs[c].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[c][a].first < pairs[c][b].first; });
    for (std::size_t i = 0; i < order.size();) {
      SourceTask task{c, pairs[c][order[i]].first, {}};
      for (; i < order.size() && pairs[c][order[i]].first == task.source; ++i) task.pair_indices.push_back(order[i]);
      tasks.push_back(std::move(task));
    }
  }

  std::vector<std::vector<double>> scores(labels.n_classes);
  std::vector<std::vector<std::uint8_t>> connected(labels.n_classes);
  for (ClassId c = 0; c < labels.n_classes; ++c) {
    scores[c].assign(pairs[c].size(), 0.0);
    connected[c].assign(pairs[c].size(), 0);
  }

  parallel_for(tasks.size(), params.workers, [&](std::size_t t) {
    thread_local DijkstraWorkspace ws;
    const SourceTask& task = tasks[t];
    const ClassId c = static_cast<ClassId>(task.class_slot);
    std::vector<NodeId> targets;
    targets.reserve(task.pair_indices.size());
    for (std::size_t idx : task.pair_indices) targets.push_back(pairs[c][idx].second);
    const auto paths = dijkstra_paths(g, task.source, targets, ws);
    for (std::size_t j = 0; j < paths.size(); ++j) {
      const std::size_t idx = task.pair_indices[j];
      scores[c][idx] = path_score(paths[j], labels, c);
      connected[c][idx] = paths[j].found;
    }
  });

  for (ClassId c = 0; c < labels.n_classes; ++c) {
    if (sizes[c] < 2) {
      report.classes.push_back(detail::absent_class(c, sizes[c], report));
      continue;
    }
    ClassConvexity cc;
    cc.class_id = c;
    cc.n_class = sizes[c];
    detail::summarize(cc, scores[c]);
    double existing_sum = 0.0;
    std::size_t existing = 0;
    for (std::size_t i = 0; i < scores[c].size(); ++i) {
      if (connected[c][i]) {
        existing_sum += scores[c][i];
        ++existing;
      }
    }
    cc.n_disconnected = scores[c].size() - existing;
    if (existing) cc.existing_only_mean = existing_sum / static_cast<double>(existing);
    if (cc.n_disconnected) {
      report.warnings.push_back("class " + std::to_string(c) + ": " + std::to_string(cc.n_disconnected) + " of " +
                                std::to_string(cc.n_pairs) + " sampled pairs are disconnected");
    }
    if (params.keep_pair_scores) {
      cc.pairs = std::move(pairs[c]);
      cc.pair_scores = std::move(scores[c]);
    }
    report.classes.push_back(std::move(cc));
  }
  detail::finish_report(report);
  return report;
}

std::vector<NodeId> subsample_per_class(const LabelVector& labels, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw InputError("class cap must be positive");
  std::vector<NodeId> rows;
  for (ClassId c = 0; c < labels.n_classes; ++c) {
    std::vector<NodeId> members = labels.members(c);
    if (members.size() > cap) {
      // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
      SplitMix64 rng(derive_seed(seed, 0x63617073ULL, c));
      for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + rng.below(members.size() - i);
        std::swap(members[i], members[j]);
      }
      members.resize(cap);
    }
    rows.insert(rows.end(), members.begin(), members.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace lcx

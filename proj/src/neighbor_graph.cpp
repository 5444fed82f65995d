#include "lcx/neighbor_graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcx/error.hpp"
#include "lcx/parallel.hpp"

namespace lcx {

namespace {

// Squared differences are accumulated into 8 lanes, element k going to lane
// k % 8, and the lanes are combined pairwise. The blocked kernel below and the
// scalar euclidean_distance() follow the same order, so both produce the same
// bits for the same pair of rows.
constexpr std::size_t kLanes = 8;
using Lanes = double __attribute__((vector_size(kLanes * sizeof(double))));

inline double combine_lanes(const double (&a)[kLanes]) {
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

inline double combine_lanes(Lanes v) {
  double a[kLanes];
  std::memcpy(a, &v, sizeof(a));
  return combine_lanes(a);
}

inline Lanes load_lanes(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

// f64 copy of an embedding with rows zero-padded to a multiple of kLanes.
// Padding contributes +0.0 to each lane, which leaves the sums unchanged.
struct PaddedRows {
  std::size_t n = 0;
  std::size_t stride = 0;
  std::vector<double> data;

  explicit PaddedRows(const EmbeddingMatrix& emb)
      : n(emb.n_points), stride((emb.dim + kLanes - 1) / kLanes * kLanes), data(n * stride, 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = emb.row(i);
      std::copy(src.begin(), src.end(), data.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
  }
  const double* row(std::size_t i) const { return data.data() + i * stride; }
};

inline void squared_distances_4x1(const double* q0, const double* q1, const double* q2, const double* q3,
                                  const double* c, std::size_t stride, double* out) {
  Lanes a0{}, a1{}, a2{}, a3{};
  for (std::size_t k = 0; k < stride; k += kLanes) {
    const Lanes cv = load_lanes(c + k);
    const Lanes d0 = load_lanes(q0 + k) - cv;
    const Lanes d1 = load_lanes(q1 + k) - cv;
    const Lanes d2 = load_lanes(q2 + k) - cv;
    const Lanes d3 = load_lanes(q3 + k) - cv;
    a0 += d0 * d0;
    a1 += d1 * d1;
    a2 += d2 * d2;
    a3 += d3 * d3;
  }
  out[0] = combine_lanes(a0);
  out[1] = combine_lanes(a1);
  out[2] = combine_lanes(a2);
  out[3] = combine_lanes(a3);
}

inline double squared_distance_1x1(const double* q, const double* c, std::size_t stride) {
  Lanes acc{};
  for (std::size_t k = 0; k < stride; k += kLanes) {
    const Lanes d = load_lanes(q + k) - load_lanes(c + k);
    acc += d * d;
  }
  return combine_lanes(acc);
}

constexpr std::size_t kQueryBlock = 64;
constexpr std::size_t kCandidateTile = 64;

// Calls fn(q_begin, q_end, dist) for consecutive blocks of query rows, where
// dist holds (q_end - q_begin) rows of n Euclidean distances. Blocks may run
// concurrently; fn must only touch state owned by its block.
template <class Fn>
void for_each_distance_block(const PaddedRows& rows, std::size_t workers, Fn&& fn) {
  const std::size_t n = rows.n;
  const std::size_t n_blocks = (n + kQueryBlock - 1) / kQueryBlock;
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    const std::size_t q_begin = b * kQueryBlock;
    const std::size_t q_end = std::min(n, q_begin + kQueryBlock);
    const std::size_t nq = q_end - q_begin;
    std::vector<double> dist(nq * n);
    for (std::size_t c_begin = 0; c_begin < n; c_begin += kCandidateTile) {
      const std::size_t c_end = std::min(n, c_begin + kCandidateTile);
      std::size_t qi = 0;
      for (; qi + 4 <= nq; qi += 4) {
        const double* q0 = rows.row(q_begin + qi);
        const double* q1 = rows.row(q_begin + qi + 1);
        const double* q2 = rows.row(q_begin + qi + 2);
        const double* q3 = rows.row(q_begin + qi + 3);
        for (std::size_t j = c_begin; j < c_end; ++j) {
          double out[4];
          squared_distances_4x1(q0, q1, q2, q3, rows.row(j), rows.stride, out);
          dist[qi * n + j] = out[0];
          dist[(qi + 1) * n + j] = out[1];
          dist[(qi + 2) * n + j] = out[2];
          dist[(qi + 3) * n + j] = out[3];
        }
      }
      for (; qi < nq; ++qi) {
        const double* q = rows.row(q_begin + qi);
        for (std::size_t j = c_begin; j < c_end; ++j) dist[qi * n + j] = squared_distance_1x1(q, rows.row(j), rows.stride);
      }
    }
    for (double& d : dist) d = std::sqrt(d);
    fn(q_begin, q_end, static_cast<const double*>(dist.data()));
  });
}

void require_valid(const EmbeddingMatrix& emb) {
  if (auto findings = validate(emb); !findings.empty()) throw InputError("invalid embeddings: " + findings[0].message);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct DisjointSets {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint8_t> rank;

  explicit DisjointSets(std::size_t n) : parent(n), rank(n, 0) { std::iota(parent.begin(), parent.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b]) ++rank[a];
  }
};

}  // namespace

NeighborGraph::NeighborGraph(std::vector<std::vector<Edge>> adjacency, GraphParams params)
    : params_(std::move(params)) {
  const std::size_t n = adjacency.size();
  offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    auto& list = adjacency[u];
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.neighbor < b.neighbor; });
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].neighbor >= n) throw InputError("edge endpoint " + std::to_string(list[k].neighbor) + " out of range");
      if (list[k].neighbor == u) throw InputError("self-loop at node " + std::to_string(u));
      if (k > 0 && list[k].neighbor == list[k - 1].neighbor) {
        throw InputError("duplicate edge (" + std::to_string(u) + ", " + std::to_string(list[k].neighbor) + ")");
      }
      if (!(list[k].weight >= 0.0) || !std::isfinite(list[k].weight)) {
        throw InputError("invalid edge weight at node " + std::to_string(u));
      }
    }
    offsets_[u + 1] = offsets_[u] + list.size();
  }
  edges_.reserve(offsets_[n]);
  for (auto& list : adjacency) edges_.insert(edges_.end(), list.begin(), list.end());
}

NeighborGraph NeighborGraph::from_edges(std::size_t n_nodes, std::span<const UndirectedEdge> edges,
                                        GraphParams params) {
  std::vector<std::vector<Edge>> adjacency(n_nodes);
  for (const auto& e : edges) {
    if (e.u >= n_nodes || e.v >= n_nodes) throw InputError("edge endpoint out of range");
    adjacency[e.u].push_back({e.v, e.weight});
    adjacency[e.v].push_back({e.u, e.weight});
  }
  return NeighborGraph(std::move(adjacency), std::move(params));
}

std::vector<NeighborGraph::UndirectedEdge> NeighborGraph::edge_list() const {
  std::vector<UndirectedEdge> out;
  out.reserve(n_edges());
  for (NodeId u = 0; u < n_nodes(); ++u) {
    for (const Edge& e : neighbors(u)) {
      if (u < e.neighbor) out.push_back({u, e.neighbor, e.weight});
    }
  }
  return out;
}

double NeighborGraph::edge_weight(NodeId u, NodeId v) const {
  const auto list = neighbors(u);
  const auto it = std::lower_bound(list.begin(), list.end(), v,
                                   [](const Edge& e, NodeId id) { return e.neighbor < id; });
  return (it != list.end() && it->neighbor == v) ? it->weight : -1.0;
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InputError("distance between rows of different dimension");
  double lanes[kLanes] = {};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    lanes[k % kLanes] += d * d;
  }
  return std::sqrt(combine_lanes(lanes));
}

KnnTable knn_table(const EmbeddingMatrix& emb, std::size_t k, std::size_t workers) {
  require_valid(emb);
  if (k < 1 || k >= emb.n_points) {
    throw InputError("K = " + std::to_string(k) + " out of range [1, " + std::to_string(emb.n_points - 1) + "]");
  }
  const PaddedRows rows(emb);
  const std::size_t n = emb.n_points;
  KnnTable table;
  table.n_points = n;
  table.k = k;
  table.ids.resize(n * k);
  table.distances.resize(n * k);

  for_each_distance_block(rows, workers, [&](std::size_t q_begin, std::size_t q_end, const double* dist) {
    std::vector<NodeId> order(n - 1);
    for (std::size_t q = q_begin; q < q_end; ++q) {
      const double* d = dist + (q - q_begin) * n;
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != q) order[m++] = static_cast<NodeId>(j);
      }
      auto closer = [d](NodeId a, NodeId b) { return d[a] < d[b] || (d[a] == d[b] && a < b); };
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), closer);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), closer);
      for (std::size_t r = 0; r < k; ++r) {
        table.ids[q * k + r] = order[r];
        table.distances[q * k + r] = d[order[r]];
      }
    }
  });
  return table;
}

NeighborGraph knn_graph_from_table(const KnnTable& table, Symmetrization symmetrization) {
  const std::size_t n = table.n_points;
  std::vector<std::vector<Edge>> adjacency(n);
  if (symmetrization == Symmetrization::union_) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ids = table.neighbors(i);
      const auto ds = table.neighbor_distances(i);
      for (std::size_t r = 0; r < table.k; ++r) {
        adjacency[i].push_back({ids[r], ds[r]});
        adjacency[ids[r]].push_back({static_cast<NodeId>(i), ds[r]});
      }
    }
    for (auto& list : adjacency) {
      std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.neighbor < b.neighbor; });
      list.erase(std::unique(list.begin(), list.end(),
                             [](const Edge& a, const Edge& b) { return a.neighbor == b.neighbor; }),
                 list.end());
    }
  } else {
    auto lists = [&](std::size_t i, NodeId j) {
      const auto ids = table.neighbors(i);
      return std::find(ids.begin(), ids.end(), j) != ids.end();
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto ids = table.neighbors(i);
      const auto ds = table.neighbor_distances(i);
      for (std::size_t r = 0; r < table.k; ++r) {
        if (lists(ids[r], static_cast<NodeId>(i))) adjacency[i].push_back({ids[r], ds[r]});
      }
    }
  }
  return NeighborGraph(std::move(adjacency), KnnParams{table.k, symmetrization});
}

NeighborGraph build_knn_graph(const EmbeddingMatrix& emb, std::size_t k, Symmetrization symmetrization,
                              std::size_t workers) {
  return knn_graph_from_table(knn_table(emb, k, workers), symmetrization);
}

NeighborGraph build_epsilon_graph(const EmbeddingMatrix& emb, double eps, std::size_t workers) {
  require_valid(emb);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("eps must be a positive finite distance");
  const PaddedRows rows(emb);
  const std::size_t n = emb.n_points;
  std::vector<std::vector<Edge>> adjacency(n);
  for_each_distance_block(rows, workers, [&](std::size_t q_begin, std::size_t q_end, const double* dist) {
    for (std::size_t q = q_begin; q < q_end; ++q) {
      const double* d = dist + (q - q_begin) * n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != q && d[j] > 0.0 && d[j] <= eps) adjacency[q].push_back({static_cast<NodeId>(j), d[j]});
      }
    }
  });
  return NeighborGraph(std::move(adjacency), EpsilonParams{eps});
}

double eps_for_edge_budget(const EmbeddingMatrix& emb, std::size_t target_edges, std::size_t workers) {
  require_valid(emb);
  const std::size_t n = emb.n_points;
  const std::size_t total = n * (n - 1) / 2;
  if (target_edges < 1 || target_edges > total) {
    throw InputError("edge budget " + std::to_string(target_edges) + " out of range [1, " + std::to_string(total) + "]");
  }
  const PaddedRows rows(emb);
  std::vector<std::vector<double>> upper(n);
  for_each_distance_block(rows, workers, [&](std::size_t q_begin, std::size_t q_end, const double* dist) {
    for (std::size_t q = q_begin; q < q_end; ++q) {
      const double* d = dist + (q - q_begin) * n;
      upper[q].assign(d + q + 1, d + n);
    }
  });
  std::vector<double> all;
  all.reserve(total);
  for (auto& u : upper) {
    all.insert(all.end(), u.begin(), u.end());
    std::vector<double>().swap(u);
  }
  auto nth = all.begin() + static_cast<std::ptrdiff_t>(target_edges - 1);
  std::nth_element(all.begin(), nth, all.end());
  return *nth;
}

std::vector<std::uint32_t> connected_components(const NeighborGraph& g) {
  const std::size_t n = g.n_nodes();
  DisjointSets sets(n);
  for (NodeId u = 0; u < n; ++u) {
    for (const Edge& e : g.neighbors(u)) sets.unite(u, e.neighbor);
  }
  std::vector<std::uint32_t> component(n);
  std::vector<std::uint32_t> dense(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (NodeId u = 0; u < n; ++u) {
    const auto root = sets.find(u);
    if (dense[root] == UINT32_MAX) dense[root] = next++;
    component[u] = dense[root];
  }
  return component;
}

GraphStats graph_stats(const NeighborGraph& g, const LabelVector& labels, std::size_t n_pairs, std::uint64_t seed) {
  if (labels.size() != g.n_nodes()) {
    throw InputError("labels length " + std::to_string(labels.size()) + " != graph nodes " + std::to_string(g.n_nodes()));
  }
  GraphStats stats;
  stats.n_nodes = g.n_nodes();
  stats.n_edges = g.n_edges();
  const auto component = connected_components(g);
  stats.n_components = component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
  for (NodeId u = 0; u < g.n_nodes(); ++u) ++stats.degree_histogram[g.degree(u)];
  for (ClassId c = 0; c < labels.n_classes; ++c) {
    const auto pairs = sample_pairs(labels, c, n_pairs, seed);
    if (pairs.empty()) continue;
    std::size_t joined = 0;
    for (const auto& p : pairs) joined += component[p.first] == component[p.second];
    stats.path_exists.push_back({c, pairs.size(), static_cast<double>(joined) / static_cast<double>(pairs.size())});
  }
  return stats;
}

nlohmann::ordered_json graph_params_json(const GraphParams& params) {
  nlohmann::ordered_json out;
  if (const auto* knn = std::get_if<KnnParams>(&params)) {
    out["mode"] = "knn";
    out["k"] = knn->k;
    out["symmetrization"] = knn->symmetrization == Symmetrization::union_ ? "union" : "intersection";
  } else {
    out["mode"] = "epsilon";
    out["eps"] = std::get<EpsilonParams>(params).eps;
  }
  return out;
}

void save_graph(const NeighborGraph& g, const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw Error("cannot open " + csv_path.string() + " for writing");
  csv << "u,v,weight\n";
  for (const auto& e : g.edge_list()) csv << e.u << ',' << e.v << ',' << format_double(e.weight) << '\n';
  if (!csv) throw Error("write failed: " + csv_path.string());

  nlohmann::ordered_json meta;
  meta["n_nodes"] = g.n_nodes();
  meta["n_edges"] = g.n_edges();
  meta.update(graph_params_json(g.params()));
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) throw Error("cannot open " + json_path.string() + " for writing");
  js << meta.dump(2) << '\n';
}

NeighborGraph load_graph(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  if (!js) throw InputError("cannot open " + json_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  GraphParams params;
  const std::string mode = meta.value("mode", "knn");
  if (mode == "knn") {
    const std::string sym = meta.value("symmetrization", "union");
    params = KnnParams{meta.at("k").get<std::size_t>(),
                       sym == "intersection" ? Symmetrization::intersection : Symmetrization::union_};
  } else if (mode == "epsilon") {
    params = EpsilonParams{meta.at("eps").get<double>()};
  } else {
    throw FormatError(json_path.string() + ": unknown graph mode \"" + mode + "\"");
  }
  const auto n_nodes = meta.at("n_nodes").get<std::size_t>();

  std::ifstream csv(csv_path);
  if (!csv) throw InputError("cannot open " + csv_path.string());
  std::vector<NeighborGraph::UndirectedEdge> edges;
  std::string line;
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (row == 1 && line.rfind("u,", 0) == 0)) continue;
    std::array<std::string_view, 3> fields;
    std::string_view rest(line);
    for (std::size_t f = 0; f < 3; ++f) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (f == 2)) {
        throw FormatError(csv_path.string() + ": expected 3 columns at row " + std::to_string(row));
      }
      fields[f] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    NeighborGraph::UndirectedEdge e{};
    const bool ok = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), e.u).ec == std::errc() &&
                    std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), e.v).ec == std::errc() &&
                    std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), e.weight).ec == std::errc();
    if (!ok) throw FormatError(csv_path.string() + ": malformed edge at row " + std::to_string(row));
    edges.push_back(e);
  }
  return NeighborGraph::from_edges(n_nodes, edges, params);
}

}  // namespace lcx

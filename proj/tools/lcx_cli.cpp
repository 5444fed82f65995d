// lcx: command-line front end for the convexity toolkit.
//
// Exit codes: 0 ok, 1 measurement warnings, 2 input errors, 3 oracle or
// runtime errors.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcx/lcx.hpp"
#include "lcx/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitWarnings = 1;
constexpr int kExitInput = 2;
constexpr int kExitOracle = 3;

struct Common {
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string out = ".";
};

struct GraphOptions {
  std::size_t k = lcx::kDefaultK;
  std::optional<double> eps;
  bool intersection = false;
};

struct OracleOptions {
  std::string model;
  std::optional<std::size_t> boundary;
  std::string head;
  std::string command;
  double timeout_s = 60.0;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Root seed for pair sampling and permutations")
      ->envname("LC_SEED")
      ->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads (0 = available parallelism)")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
}

void add_graph_options(CLI::App* sub, GraphOptions& g) {
  auto* k = sub->add_option("--k", g.k, "Neighbors per point in the KNN graph")->capture_default_str();
  auto* eps = sub->add_option("--eps", g.eps, "Build an epsilon graph with this radius instead of KNN");
  k->excludes(eps);
  sub->add_flag("--intersection", g.intersection, "Keep only mutual KNN edges (default: union)");
}

void add_oracle_options(CLI::App* sub, OracleOptions& o) {
  auto* model = sub->add_option("--model", o.model, "Feedforward model spec (JSON)");
  sub->add_option("--boundary", o.boundary, "Model boundary the embeddings come from (default: the layer id)");
  auto* head = sub->add_option("--head", o.head, "Linear head (JSON); the embeddings are its input");
  auto* cmd = sub->add_option("--oracle-cmd", o.command,
                              "NDJSON oracle command run under /bin/sh; {layer} becomes the layer id");
  sub->add_option("--oracle-timeout", o.timeout_s, "Seconds to wait for each oracle reply")->capture_default_str();
  model->excludes(head)->excludes(cmd);
  head->excludes(cmd);
}

lcx::GraphParams graph_params(const GraphOptions& g) {
  if (g.eps) return lcx::EpsilonParams{*g.eps};
  return lcx::KnnParams{g.k, g.intersection ? lcx::Symmetrization::intersection : lcx::Symmetrization::union_};
}

lcx::NeighborGraph build_graph(const lcx::EmbeddingMatrix& emb, const GraphOptions& g, std::size_t workers) {
  if (g.eps) return lcx::build_epsilon_graph(emb, *g.eps, workers);
  if (g.k < 1 || g.k >= emb.n_points) {
    throw lcx::InputError("k = " + std::to_string(g.k) + " needs between 2 and N = " +
                          std::to_string(emb.n_points) + " points");
  }
  return lcx::build_knn_graph(emb, g.k,
                              g.intersection ? lcx::Symmetrization::intersection : lcx::Symmetrization::union_,
                              workers);
}

lcx::EmbeddingMatrix load_layer(const std::string& path) {
  if (!fs::exists(path)) throw lcx::InputError("embedding file not found: " + path);
  try {
    return lcx::load_embeddings(path);
  } catch (const lcx::InputError& e) {
    throw lcx::InputError(path + ": " + e.what());
  }
}

lcx::LabelVector load_label_file(const std::string& path) {
  if (!fs::exists(path)) throw lcx::InputError("label file not found: " + path);
  try {
    return lcx::load_labels(path);
  } catch (const lcx::InputError& e) {
    throw lcx::InputError(path + ": " + e.what());
  }
}

void check_unique_layers(const std::vector<lcx::EmbeddingMatrix>& layers) {
  std::map<std::uint32_t, std::size_t> seen;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (auto [it, fresh] = seen.emplace(layers[i].layer_id, i); !fresh) {
      throw lcx::InputError("inputs " + std::to_string(it->second) + " and " + std::to_string(i) +
                            " share layer id " + std::to_string(layers[i].layer_id) + "; pass --layer-ids");
    }
  }
}

std::vector<lcx::EmbeddingMatrix> load_layers(const std::vector<std::string>& paths,
                                              const std::vector<std::uint32_t>& layer_ids) {
  if (!layer_ids.empty() && layer_ids.size() != paths.size()) {
    throw lcx::InputError("--layer-ids has " + std::to_string(layer_ids.size()) + " entries for " +
                          std::to_string(paths.size()) + " embedding files");
  }
  std::vector<lcx::EmbeddingMatrix> layers;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    layers.push_back(load_layer(paths[i]));
    if (!layer_ids.empty()) layers.back().layer_id = layer_ids[i];
  }
  check_unique_layers(layers);
  return layers;
}

void check_sizes(const lcx::EmbeddingMatrix& emb, const lcx::LabelVector& labels, const std::string& path) {
  if (emb.n_points != labels.size()) {
    throw lcx::InputError(path + " has " + std::to_string(emb.n_points) + " points but the label file has " +
                          std::to_string(labels.size()) + " labels");
  }
}

json graph_config(const GraphOptions& g) { return lcx::graph_params_json(graph_params(g)); }

// Oracle for one layer, built from whichever source was configured.
std::unique_ptr<lcx::ClassifierOracle> make_oracle(const OracleOptions& o, const lcx::EmbeddingMatrix& emb,
                                                   bool single_layer) {
  if (!o.model.empty()) {
    auto spec = lcx::load_model_spec(o.model);
    if (o.boundary && !single_layer) throw lcx::InputError("--boundary applies to a single embedding file only");
    const std::size_t boundary = o.boundary.value_or(emb.layer_id);
    return std::make_unique<lcx::FeedforwardOracle>(std::move(spec), boundary);
  }
  if (!o.head.empty()) return std::make_unique<lcx::LinearOracle>(lcx::load_linear_head(o.head));
  if (!o.command.empty()) {
    std::string cmd = o.command;
    for (auto pos = cmd.find("{layer}"); pos != std::string::npos; pos = cmd.find("{layer}", pos)) {
      cmd.replace(pos, 7, std::to_string(emb.layer_id));
    }
    if (!(o.timeout_s > 0.0)) throw lcx::InputError("--oracle-timeout must be positive");
    return std::make_unique<lcx::SubprocessOracle>(
        cmd, emb.dim, std::chrono::milliseconds(static_cast<long long>(o.timeout_s * 1000.0)));
  }
  throw lcx::InputError("no oracle configured: pass --model, --head or --oracle-cmd");
}

json oracle_config(const OracleOptions& o) {
  json j;
  if (!o.model.empty()) {
    j["model"] = o.model;
    if (o.boundary) j["boundary"] = *o.boundary;
  } else if (!o.head.empty()) {
    j["head"] = o.head;
  } else {
    j["command"] = o.command;
    j["timeout_s"] = o.timeout_s;
  }
  return j;
}

json with_config(json report, const json& config) {
  json out;
  out["config"] = config;
  for (auto& [key, value] : report.items()) out[key] = value;
  return out;
}

class Run {
 public:
  Run(std::string command, int argc, char** argv) : command_(std::move(command)), started_(utc_now()) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
  }

  // Sidecar holding everything that legitimately differs between runs.
  void write_sidecar(const Common& c, int exit_code) const {
    json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["started"] = started_;
    j["finished"] = utc_now();
    j["workers"] = lcx::resolve_workers(c.workers);
    j["exit_code"] = exit_code;
    lcx::write_json(fs::path(c.out) / "run.json", j);
  }

 private:
  std::string command_;
  std::string started_;
  std::vector<std::string> argv_;
};

int exit_for(const std::vector<std::string>& warnings) { return warnings.empty() ? kExitOk : kExitWarnings; }

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ---- convert --------------------------------------------------------------

struct ConvertArgs {
  std::string in;
  std::string out_path;
  std::string kind = "auto";
  std::optional<std::uint32_t> layer_id;
  std::string name;
  std::optional<std::uint32_t> n_classes;
  std::string label_kind;
};

std::string sniff_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lcx::InputError("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string(magic, 4) == "LCEB") return "embeddings";
  if (in.gcount() == 4 && std::string(magic, 4) == "LCLB") return "labels";
  return "embeddings";
}

int cmd_convert(const ConvertArgs& a) {
  if (!fs::exists(a.in)) throw lcx::InputError("input file not found: " + a.in);
  const std::string kind = a.kind == "auto" ? sniff_kind(a.in) : a.kind;
  std::vector<lcx::Finding> findings;
  if (kind == "embeddings") {
    auto m = load_layer(a.in);
    if (a.layer_id) m.layer_id = *a.layer_id;
    if (!a.name.empty()) m.name = a.name;
    findings = lcx::validate(m);
    if (findings.empty()) lcx::save_embeddings(m, a.out_path);
  } else if (kind == "labels") {
    auto l = load_label_file(a.in);
    if (a.n_classes) {
      if (*a.n_classes < l.n_classes) throw lcx::InputError("--n-classes is below the largest label + 1");
      l.n_classes = *a.n_classes;
    }
    if (a.label_kind == "model") l.kind = lcx::LabelKind::model;
    if (a.label_kind == "data") l.kind = lcx::LabelKind::data;
    findings = lcx::validate(l);
    if (findings.empty()) lcx::save_labels(l, a.out_path);
  } else {
    throw lcx::InputError("unknown --kind \"" + kind + "\"");
  }
  for (const auto& f : findings) std::cerr << "invalid: " << f.message << '\n';
  return findings.empty() ? kExitOk : kExitInput;
}

// ---- build-graph ----------------------------------------------------------

struct BuildGraphArgs {
  std::string emb;
  std::string labels;
  GraphOptions graph;
  std::size_t n_pairs = lcx::kDefaultPairsPerClass;
};

int cmd_build_graph(const BuildGraphArgs& a, const Common& c) {
  const auto emb = load_layer(a.emb);
  const auto g = build_graph(emb, a.graph, c.workers);
  const fs::path out(c.out);
  fs::create_directories(out);
  lcx::save_graph(g, out / "graph.csv", out / "graph.json");

  json config;
  config["command"] = "build-graph";
  config["embeddings"] = a.emb;
  config["graph"] = graph_config(a.graph);
  json stats;
  stats["config"] = config;
  std::optional<lcx::LabelVector> labels;
  if (!a.labels.empty()) {
    labels = load_label_file(a.labels);
    check_sizes(emb, *labels, a.emb);
    stats["config"]["labels"] = a.labels;
    stats["config"]["n_pairs"] = a.n_pairs;
    stats["config"]["seed"] = c.seed;
  }
  const auto gs = labels ? lcx::graph_stats(g, *labels, a.n_pairs, c.seed)
                         : lcx::graph_stats(g, lcx::LabelVector{std::vector<lcx::ClassId>(emb.n_points, 0), 1,
                                                                lcx::LabelKind::data},
                                            0, c.seed);
  stats["n_nodes"] = gs.n_nodes;
  stats["n_edges"] = gs.n_edges;
  stats["n_components"] = gs.n_components;
  json hist = json::array();
  for (const auto& [deg, count] : gs.degree_histogram) hist.push_back({deg, count});
  stats["degree_histogram"] = hist;
  std::vector<std::string> warnings;
  if (labels) {
    json pe = json::array();
    for (const auto& p : gs.path_exists) {
      pe.push_back({{"class", p.class_id}, {"n_pairs", p.n_pairs}, {"fraction", p.fraction}});
      if (p.fraction < 1.0) {
        warnings.push_back("class " + std::to_string(p.class_id) + ": only " + lcx::format_number(p.fraction) +
                           " of sampled pairs are connected");
      }
    }
    stats["path_exists"] = pe;
  }
  stats["warnings"] = warnings;
  lcx::write_json(out / "graph_stats.json", stats);
  print_warnings(warnings);
  return exit_for(warnings);
}

// ---- graph-convexity ------------------------------------------------------

struct GraphConvexityArgs {
  std::vector<std::string> emb;
  std::vector<std::uint32_t> layer_ids;
  std::string labels;
  GraphOptions graph;
  std::size_t n_pairs = lcx::kDefaultPairsPerClass;
  std::size_t class_cap = 0;
  bool pair_scores = false;
};

int cmd_graph_convexity(const GraphConvexityArgs& a, const Common& c) {
  auto labels = load_label_file(a.labels);
  auto layers = load_layers(a.emb, a.layer_ids);
  json config;
  config["command"] = "graph-convexity";
  config["labels"] = a.labels;
  config["label_kind"] = lcx::to_string(labels.kind);
  config["graph"] = graph_config(a.graph);
  config["n_pairs"] = a.n_pairs;
  config["seed"] = c.seed;
  config["class_cap"] = a.class_cap ? json(a.class_cap) : json(nullptr);

  const fs::path out(c.out);
  std::vector<lcx::LayerConvexityReport> reports;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& emb = layers[i];
    check_sizes(emb, labels, a.emb[i]);
    lcx::LabelVector layer_labels = labels;
    if (a.class_cap) {
      const auto rows = lcx::subsample_per_class(labels, a.class_cap, c.seed);
      emb = emb.select_rows(rows);
      layer_labels = labels.select(rows);
    }
    const auto g = build_graph(emb, a.graph, c.workers);
    lcx::GraphConvexityParams gp;
    gp.n_pairs = a.n_pairs;
    gp.seed = c.seed;
    gp.workers = c.workers;
    gp.keep_pair_scores = a.pair_scores;
    auto report = lcx::graph_convexity(g, layer_labels, gp);
    report.layer_id = emb.layer_id;
    report.layer_name = emb.name;
    json layer_config = config;
    layer_config["embeddings"] = a.emb[i];
    lcx::write_json(out / ("graph_layer" + std::to_string(emb.layer_id) + ".json"),
                    with_config(lcx::to_json(report), layer_config));
    for (const auto& w : report.warnings) warnings.push_back("layer " + std::to_string(emb.layer_id) + ": " + w);
    reports.push_back(std::move(report));
  }
  lcx::write_text(out / "graph_convexity.csv", lcx::reports_csv(reports));
  print_warnings(warnings);
  return exit_for(warnings);
}

// ---- euclid-convexity -----------------------------------------------------

struct EuclidArgs {
  std::vector<std::string> emb;
  std::vector<std::uint32_t> layer_ids;
  std::string labels;
  OracleOptions oracle;
  std::size_t n_interp = 10;
  std::size_t n_pairs = lcx::kDefaultPairsPerClass;
  std::size_t batch_pairs = lcx::kPairsPerOracleBatch;
  bool pair_scores = false;
};

int cmd_euclid_convexity(const EuclidArgs& a, const Common& c) {
  auto labels = load_label_file(a.labels);
  auto layers = load_layers(a.emb, a.layer_ids);
  json config;
  config["command"] = "euclid-convexity";
  config["labels"] = a.labels;
  config["label_kind"] = lcx::to_string(labels.kind);
  config["oracle"] = oracle_config(a.oracle);
  config["n_interpolants"] = a.n_interp;
  config["n_pairs"] = a.n_pairs;
  config["batch_pairs"] = a.batch_pairs;
  config["seed"] = c.seed;

  std::vector<std::string> warnings;
  if (labels.kind != lcx::LabelKind::model) {
    warnings.push_back("labels are data labels; Euclidean convexity is defined on model labels");
  }
  const fs::path out(c.out);
  std::vector<lcx::LayerConvexityReport> reports;
  bool truncated = false;
  for (std::size_t i = 0; i < layers.size() && !truncated; ++i) {
    const auto& emb = layers[i];
    check_sizes(emb, labels, a.emb[i]);
    auto oracle = make_oracle(a.oracle, emb, layers.size() == 1);
    lcx::EuclideanConvexityParams ep;
    ep.scheme.n_points = a.n_interp;
    ep.n_pairs = a.n_pairs;
    ep.seed = c.seed;
    ep.workers = c.workers;
    ep.pairs_per_batch = a.batch_pairs;
    ep.keep_pair_scores = a.pair_scores;
    auto report = lcx::euclidean_convexity(emb, labels, *oracle, ep);
    report.layer_id = emb.layer_id;
    report.layer_name = emb.name;
    json layer_config = config;
    layer_config["embeddings"] = a.emb[i];
    lcx::write_json(out / ("euclid_layer" + std::to_string(emb.layer_id) + ".json"),
                    with_config(lcx::to_json(report), layer_config));
    for (const auto& w : report.warnings) warnings.push_back("layer " + std::to_string(emb.layer_id) + ": " + w);
    if (report.truncated) {
      truncated = true;
      std::cerr << "error: layer " << emb.layer_id << ": " << report.error << '\n';
    }
    reports.push_back(std::move(report));
  }
  lcx::write_text(out / "euclid_convexity.csv", lcx::reports_csv(reports));
  print_warnings(warnings);
  if (truncated) return kExitOracle;
  return exit_for(warnings);
}

// ---- baseline -------------------------------------------------------------

struct BaselineArgs {
  std::string emb;
  std::string labels;
  std::string metric = "graph";
  std::size_t repeats = 20;
  GraphOptions graph;
  OracleOptions oracle;
  std::size_t n_interp = 10;
  std::size_t n_pairs = lcx::kDefaultPairsPerClass;
};

int cmd_baseline(const BaselineArgs& a, const Common& c) {
  const auto labels = load_label_file(a.labels);
  const auto emb = load_layer(a.emb);
  check_sizes(emb, labels, a.emb);
  json config;
  config["command"] = "baseline";
  config["embeddings"] = a.emb;
  config["labels"] = a.labels;
  config["metric"] = a.metric;
  config["repeats"] = a.repeats;
  config["n_pairs"] = a.n_pairs;
  config["seed"] = c.seed;

  std::vector<std::string> warnings;
  lcx::BaselineResult result;
  if (a.metric == "graph") {
    config["graph"] = graph_config(a.graph);
    const auto g = build_graph(emb, a.graph, c.workers);
    lcx::GraphConvexityParams gp;
    gp.n_pairs = a.n_pairs;
    gp.seed = c.seed;
    gp.workers = c.workers;
    result = lcx::random_baseline(
        [&](const lcx::LabelVector& l) { return lcx::graph_convexity(g, l, gp).overall_mean.value_or(0.0); },
        labels, c.seed, a.repeats);
  } else if (a.metric == "euclidean") {
    config["oracle"] = oracle_config(a.oracle);
    config["n_interpolants"] = a.n_interp;
    auto oracle = make_oracle(a.oracle, emb, true);
    lcx::EuclideanConvexityParams ep;
    ep.scheme.n_points = a.n_interp;
    ep.n_pairs = a.n_pairs;
    ep.seed = c.seed;
    ep.workers = c.workers;
    result = lcx::random_baseline(
        [&](const lcx::LabelVector& l) {
          auto r = lcx::euclidean_convexity(emb, l, *oracle, ep);
          if (r.truncated) throw lcx::OracleError(r.error);
          return r.overall_mean.value_or(0.0);
        },
        labels, c.seed, a.repeats);
  } else {
    throw lcx::InputError("unknown --metric \"" + a.metric + "\" (expected graph or euclidean)");
  }
  json doc;
  doc["config"] = config;
  const json body = lcx::to_json(result);
  for (auto& [key, value] : body.items()) doc[key] = value;
  doc["warnings"] = warnings;
  lcx::write_json(fs::path(c.out) / "baseline.json", doc);
  return exit_for(warnings);
}

// ---- hubness --------------------------------------------------------------

struct HubnessArgs {
  std::vector<std::string> emb;
  std::vector<std::uint32_t> layer_ids;
  std::size_t k = lcx::kDefaultK;
  bool full = false;
};

int cmd_hubness(const HubnessArgs& a, const Common& c) {
  const auto layers = load_layers(a.emb, a.layer_ids);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto h = lcx::hubness(layers[i], a.k, c.workers);
    json doc;
    doc["config"] = {{"command", "hubness"}, {"embeddings", a.emb[i]}, {"k", a.k}};
    doc["layer_id"] = layers[i].layer_id;
    const json body = lcx::to_json(h, a.full);
    for (auto& [key, value] : body.items()) doc[key] = value;
    lcx::write_json(fs::path(c.out) / ("hubness_layer" + std::to_string(layers[i].layer_id) + ".json"), doc);
  }
  return kExitOk;
}

// ---- correlate ------------------------------------------------------------

struct CorrelateArgs {
  std::string convexity;
  std::string recall;
  std::string x_col = "mean";
  std::string y_col = "recall";
  std::string key_col = "class";
  std::optional<std::uint32_t> layer;
  std::string metric;
  double alpha = 0.05;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& path) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw lcx::InputError(path + ": no column named \"" + name + "\"");
  }
};

// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF.
Table read_csv_table(const std::string& path) {
  const std::string text = lcx::read_text(path);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw lcx::FormatError(path + ": unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw lcx::FormatError(path + ": empty table");
  Table t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw lcx::FormatError(path + ": row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                             " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw lcx::FormatError(where + ": \"" + s + "\" is not a finite number");
  }
  return v;
}

int cmd_correlate(const CorrelateArgs& a, const Common& c) {
  const Table conv = read_csv_table(a.convexity);
  const Table rec = read_csv_table(a.recall);
  const std::size_t ck = conv.column(a.key_col, a.convexity);
  const std::size_t cx = conv.column(a.x_col, a.convexity);
  const std::size_t rk = rec.column(a.key_col, a.recall);
  const std::size_t ry = rec.column(a.y_col, a.recall);
  std::optional<std::size_t> c_layer;
  std::optional<std::size_t> c_metric;
  if (a.layer) c_layer = conv.column("layer_id", a.convexity);
  if (!a.metric.empty()) c_metric = conv.column("metric", a.convexity);

  std::map<std::string, double> xs;
  for (std::size_t r = 0; r < conv.rows.size(); ++r) {
    const auto& row = conv.rows[r];
    if (c_layer && row[*c_layer] != std::to_string(*a.layer)) continue;
    if (c_metric && row[*c_metric] != a.metric) continue;
    if (row[cx].empty()) continue;  // absent class
    const std::string where = a.convexity + " row " + std::to_string(r + 2);
    if (!xs.emplace(row[ck], parse_number(row[cx], where)).second) {
      throw lcx::InputError(a.convexity + ": class " + row[ck] +
                            " appears more than once; select one table with --layer/--metric");
    }
  }
  std::map<std::string, double> ys;
  for (std::size_t r = 0; r < rec.rows.size(); ++r) {
    const auto& row = rec.rows[r];
    if (!ys.emplace(row[rk], parse_number(row[ry], a.recall + " row " + std::to_string(r + 2))).second) {
      throw lcx::InputError(a.recall + ": class " + row[rk] + " appears more than once");
    }
  }

  // Join on class id, ordered numerically when ids are numeric.
  std::vector<std::string> keys;
  std::vector<std::string> warnings;
  for (const auto& [k, v] : xs) {
    if (ys.count(k)) {
      keys.push_back(k);
    } else {
      warnings.push_back("class " + k + " has a convexity value but no recall value");
    }
  }
  for (const auto& [k, v] : ys) {
    if (!xs.count(k)) warnings.push_back("class " + k + " has a recall value but no convexity value");
  }
  std::stable_sort(keys.begin(), keys.end(), [](const std::string& l, const std::string& r) {
    if (l.size() != r.size()) return l.size() < r.size();
    return l < r;
  });
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& k : keys) {
    x.push_back(xs[k]);
    y.push_back(ys[k]);
  }
  const auto corr = lcx::pearson_fisher(x, y, a.alpha);

  json doc;
  doc["config"] = {{"command", "correlate"},
                   {"convexity", a.convexity},
                   {"recall", a.recall},
                   {"key_column", a.key_col},
                   {"x_column", a.x_col},
                   {"y_column", a.y_col},
                   {"layer", a.layer ? json(*a.layer) : json(nullptr)},
                   {"metric", a.metric.empty() ? json(nullptr) : json(a.metric)},
                   {"alpha", a.alpha}};
  const json body = lcx::to_json(corr);
  for (auto& [key, value] : body.items()) doc[key] = value;
  json joined = json::array();
  for (std::size_t i = 0; i < keys.size(); ++i) joined.push_back({{"class", keys[i]}, {"x", x[i]}, {"y", y[i]}});
  doc["joined"] = joined;
  doc["warnings"] = warnings;
  const fs::path out(c.out);
  lcx::write_json(out / "correlation.json", doc);

  std::ostringstream csv;
  csv << "class,convexity,recall,r,ci_low,ci_high\n";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    csv << keys[i] << ',' << lcx::format_number(x[i]) << ',' << lcx::format_number(y[i]) << ','
        << lcx::format_number(corr.r) << ',' << lcx::format_number(corr.ci_low) << ','
        << lcx::format_number(corr.ci_high) << '\n';
  }
  lcx::write_text(out / "correlation.csv", csv.str());
  print_warnings(warnings);
  return exit_for(warnings);
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  lcx::SynthConfig cfg;
  std::string label_kind = "data";
  std::string format = "binary";
  std::vector<std::size_t> sweep_n;
  std::vector<std::size_t> sweep_k;
  std::size_t n_pairs = lcx::kDefaultPairsPerClass;
};

int cmd_synth(SynthArgs a, const Common& c) {
  a.cfg.seed = c.seed;
  const fs::path out(c.out);
  fs::create_directories(out);
  json manifest;
  manifest["config"] = lcx::synth_config_json(a.cfg);
  manifest["config"]["command"] = "synth";

  if (!a.sweep_n.empty() || !a.sweep_k.empty()) {
    if (a.sweep_n.empty()) a.sweep_n = {a.cfg.n};
    if (a.sweep_k.empty()) a.sweep_k = {lcx::kDefaultK};
    const auto rows = lcx::regime_sweep(a.cfg, a.sweep_n, a.sweep_k, a.n_pairs, c.seed, c.workers);
    manifest["config"]["sweep_n"] = a.sweep_n;
    manifest["config"]["sweep_k"] = a.sweep_k;
    manifest["config"]["n_pairs"] = a.n_pairs;
    manifest["sweep"] = lcx::to_json(std::span<const lcx::SweepRow>(rows));
    lcx::write_json(out / "sweep.json", manifest);
    lcx::write_text(out / "sweep.csv", lcx::sweep_csv(rows));
    return kExitOk;
  }

  auto d = lcx::generate(a.cfg);
  if (a.label_kind == "model") d.labels.kind = lcx::LabelKind::model;
  const bool csv = a.format == "csv";
  if (!csv && a.format != "binary") throw lcx::InputError("--format must be binary or csv");
  const std::string emb_name = csv ? "embeddings.csv" : "embeddings.lceb";
  const std::string lab_name = csv ? "labels.csv" : "labels.lclb";
  lcx::save_embeddings(d.embeddings, out / emb_name);
  lcx::save_labels(d.labels, out / lab_name);
  manifest["embeddings"] = emb_name;
  manifest["labels"] = lab_name;
  manifest["n_points"] = d.embeddings.n_points;
  manifest["dim"] = d.embeddings.dim;
  manifest["n_classes"] = d.labels.n_classes;
  if (a.cfg.generator == "annulus") {
    const auto f = lcx::annulus_geodesic_fixture(a.cfg.n, a.cfg.radius, a.cfg.sigma, a.cfg.seed);
    json marked = json::array();
    for (const auto& m : f.marked) marked.push_back({{"a", m.a}, {"b", m.b}, {"geodesic", m.geodesic}});
    manifest["marked_pairs"] = marked;
  }
  lcx::write_json(out / "manifest.json", manifest);
  return kExitOk;
}

// ---- report ---------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const Common& c) {
  std::vector<lcx::LayerConvexityReport> reports;
  for (const auto& path : inputs) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(lcx::read_text(path));
    } catch (const nlohmann::json::exception& e) {
      throw lcx::FormatError(path + ": " + e.what());
    }
    try {
      reports.push_back(lcx::report_from_json(doc));
    } catch (const lcx::InputError& e) {
      throw lcx::FormatError(path + ": " + e.what());
    }
  }
  std::stable_sort(reports.begin(), reports.end(), [](const auto& l, const auto& r) {
    if (l.metric != r.metric) return l.metric > r.metric;  // graph before euclidean
    return l.layer_id < r.layer_id;
  });
  const fs::path out(c.out);
  lcx::write_text(out / "summary.csv", lcx::reports_csv(reports));
  lcx::write_text(out / "summary.md", lcx::reports_markdown(reports));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convexity of decision regions in latent spaces"};
  app.set_config("--config", "", "TOML file with option values; command-line flags win");
  app.require_subcommand(1);

  Common common;

  ConvertArgs convert;
  auto* s_convert = app.add_subcommand("convert", "Convert between CSV and binary embedding/label files");
  s_convert->add_option("input", convert.in, "Input file")->required();
  s_convert->add_option("output", convert.out_path, "Output file (.csv for CSV, anything else binary)")->required();
  s_convert->add_option("--kind", convert.kind, "embeddings, labels or auto")
      ->check(CLI::IsMember({"auto", "embeddings", "labels"}))
      ->capture_default_str();
  s_convert->add_option("--layer-id", convert.layer_id, "Layer id to store");
  s_convert->add_option("--name", convert.name, "Layer name to store");
  s_convert->add_option("--n-classes", convert.n_classes, "Class count to store");
  s_convert->add_option("--label-kind", convert.label_kind, "data or model")->check(CLI::IsMember({"data", "model"}));

  BuildGraphArgs build;
  auto* s_build = app.add_subcommand("build-graph", "Build a neighbor graph and report its statistics");
  s_build->add_option("--emb", build.emb, "Embedding file")->required();
  s_build->add_option("--labels", build.labels, "Label file, for path-existence statistics");
  s_build->add_option("--pairs", build.n_pairs, "Pairs per class for path-existence statistics")
      ->capture_default_str();
  add_graph_options(s_build, build.graph);
  add_common(s_build, common);

  GraphConvexityArgs gconv;
  auto* s_gconv = app.add_subcommand("graph-convexity", "Graph convexity per class and layer");
  s_gconv->add_option("--emb", gconv.emb, "Embedding files, one per layer")->required();
  s_gconv->add_option("--layer-ids", gconv.layer_ids, "Layer ids overriding the ids stored in the files");
  s_gconv->add_option("--labels", gconv.labels, "Label file")->required();
  s_gconv->add_option("--pairs", gconv.n_pairs, "Pairs sampled per class")->capture_default_str();
  s_gconv->add_option("--class-cap", gconv.class_cap, "Subsample every class to at most this many points (0 = off)")
      ->capture_default_str();
  s_gconv->add_flag("--pair-scores", gconv.pair_scores, "Include every sampled pair and its score");
  add_graph_options(s_gconv, gconv.graph);
  add_common(s_gconv, common);

  EuclidArgs econv;
  auto* s_econv = app.add_subcommand("euclid-convexity", "Euclidean convexity per class and layer");
  s_econv->add_option("--emb", econv.emb, "Embedding files, one per layer")->required();
  s_econv->add_option("--layer-ids", econv.layer_ids, "Layer ids overriding the ids stored in the files");
  s_econv->add_option("--labels", econv.labels, "Model label file")->required();
  s_econv->add_option("--np", econv.n_interp, "Interior points per segment")->capture_default_str();
  s_econv->add_option("--pairs", econv.n_pairs, "Pairs sampled per class")->capture_default_str();
  s_econv->add_option("--batch-pairs", econv.batch_pairs, "Pairs per oracle request")->capture_default_str();
  s_econv->add_flag("--pair-scores", econv.pair_scores, "Include every sampled pair and its score");
  add_oracle_options(s_econv, econv.oracle);
  add_common(s_econv, common);

  BaselineArgs base;
  auto* s_base = app.add_subcommand("baseline", "Convexity under randomly permuted labels");
  s_base->add_option("--emb", base.emb, "Embedding file")->required();
  s_base->add_option("--labels", base.labels, "Label file")->required();
  s_base->add_option("--metric", base.metric, "graph or euclidean")->capture_default_str();
  s_base->add_option("--repeats", base.repeats, "Permutation repeats")->capture_default_str();
  s_base->add_option("--pairs", base.n_pairs, "Pairs sampled per class")->capture_default_str();
  s_base->add_option("--np", base.n_interp, "Interior points per segment (euclidean)")->capture_default_str();
  add_graph_options(s_base, base.graph);
  add_oracle_options(s_base, base.oracle);
  add_common(s_base, common);

  HubnessArgs hub;
  auto* s_hub = app.add_subcommand("hubness", "k-occurrence skewness and Robin Hood index");
  s_hub->add_option("--emb", hub.emb, "Embedding files")->required();
  s_hub->add_option("--layer-ids", hub.layer_ids, "Layer ids overriding the ids stored in the files");
  s_hub->add_option("--k", hub.k, "Neighbors per point")->capture_default_str();
  s_hub->add_flag("--full", hub.full, "Include every k-occurrence count");
  add_common(s_hub, common);

  CorrelateArgs corr;
  auto* s_corr = app.add_subcommand("correlate", "Pearson correlation of convexity and recall per class");
  s_corr->add_option("--convexity", corr.convexity, "Convexity CSV (e.g. a report CSV)")->required();
  s_corr->add_option("--recall", corr.recall, "Recall CSV with class and recall columns")->required();
  s_corr->add_option("--x-col", corr.x_col, "Convexity column")->capture_default_str();
  s_corr->add_option("--y-col", corr.y_col, "Recall column")->capture_default_str();
  s_corr->add_option("--key-col", corr.key_col, "Join column")->capture_default_str();
  s_corr->add_option("--layer", corr.layer, "Keep only this layer_id from the convexity CSV");
  s_corr->add_option("--metric", corr.metric, "Keep only this metric from the convexity CSV");
  s_corr->add_option("--alpha", corr.alpha, "Significance level of the interval")->capture_default_str();
  add_common(s_corr, common);

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic fixture or run a regime sweep");
  s_synth->add_option("--generator", synth.cfg.generator, "blobs, crescent, split-lobes or annulus")
      ->check(CLI::IsMember({"blobs", "crescent", "split-lobes", "annulus"}))
      ->capture_default_str();
  s_synth->add_option("--n", synth.cfg.n, "Points per class (annulus: total)")->capture_default_str();
  s_synth->add_option("--dim", synth.cfg.dim, "Dimension (blobs)")->capture_default_str();
  s_synth->add_option("--classes", synth.cfg.n_classes, "Class count (blobs)")->capture_default_str();
  s_synth->add_option("--separation", synth.cfg.separation, "Center spacing (blobs)")->capture_default_str();
  s_synth->add_option("--sigma", synth.cfg.sigma, "Noise level")->capture_default_str();
  s_synth->add_option("--gap", synth.cfg.gap, "Blob offset (crescent)")->capture_default_str();
  s_synth->add_option("--bridge", synth.cfg.bridge_width, "Bridge width (split-lobes)")->capture_default_str();
  s_synth->add_option("--lobes", synth.cfg.lobes, "Lobe count, 1 or 2 (split-lobes)")->capture_default_str();
  s_synth->add_option("--radius", synth.cfg.radius, "Radius (annulus)")->capture_default_str();
  s_synth->add_option("--label-kind", synth.label_kind, "data or model")
      ->check(CLI::IsMember({"data", "model"}))
      ->capture_default_str();
  s_synth->add_option("--format", synth.format, "binary or csv")->capture_default_str();
  s_synth->add_option("--sweep-n", synth.sweep_n, "Regime sweep: n values");
  s_synth->add_option("--sweep-k", synth.sweep_k, "Regime sweep: k values");
  s_synth->add_option("--pairs", synth.n_pairs, "Regime sweep: pairs per class")->capture_default_str();
  add_common(s_synth, common);

  std::vector<std::string> report_inputs;
  auto* s_report = app.add_subcommand("report", "Merge per-layer JSON reports into CSV and Markdown summaries");
  s_report->add_option("inputs", report_inputs, "Report JSON files")->required();
  add_common(s_report, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Run run(name, argc, argv);
  int code = kExitOk;
  try {
    if (name != "convert") fs::create_directories(common.out);
    if (name == "convert") {
      code = cmd_convert(convert);
    } else if (name == "build-graph") {
      code = cmd_build_graph(build, common);
    } else if (name == "graph-convexity") {
      code = cmd_graph_convexity(gconv, common);
    } else if (name == "euclid-convexity") {
      code = cmd_euclid_convexity(econv, common);
    } else if (name == "baseline") {
      code = cmd_baseline(base, common);
    } else if (name == "hubness") {
      code = cmd_hubness(hub, common);
    } else if (name == "correlate") {
      code = cmd_correlate(corr, common);
    } else if (name == "synth") {
      code = cmd_synth(synth, common);
    } else if (name == "report") {
      code = cmd_report(report_inputs, common);
    }
  } catch (const lcx::InputError& e) {
    std::cerr << "error: " << name << ": " << e.what() << '\n';
    code = kExitInput;
  } catch (const lcx::OracleError& e) {
    std::cerr << "error: " << name << ": oracle: " << e.what() << '\n';
    code = kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << name << ": " << e.what() << '\n';
    code = kExitOracle;
  }
  if (name != "convert") {
    try {
      run.write_sidecar(common, code);
    } catch (const std::exception& e) {
      std::cerr << "warning: could not write run.json: " << e.what() << '\n';
    }
  }
  return code;
}

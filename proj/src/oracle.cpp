#include "lcx/oracle.hpp"

#include <cmath>
#include <fstream>
#include <optional>

#include "lcx/error.hpp"

namespace lcx {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string layer_desc(const Layer& layer, std::size_t index) {
  std::string s = "layer " + std::to_string(index) + " (";
  if (const auto* a = std::get_if<AffineLayer>(&layer)) {
    s += "affine " + std::to_string(a->rows) + "x" + std::to_string(a->cols);
  } else if (std::holds_alternative<ReluLayer>(layer)) {
    s += "relu";
  } else {
    s += "layernorm " + std::to_string(std::get<LayerNormLayer>(layer).gain.size());
  }
  return s + ")";
}

// Width a layer requires at its input, if it constrains one.
std::optional<std::size_t> input_width(const Layer& layer) {
  if (const auto* a = std::get_if<AffineLayer>(&layer)) return a->cols;
  if (const auto* n = std::get_if<LayerNormLayer>(&layer)) return n->gain.size();
  return std::nullopt;
}

std::optional<std::size_t> output_width(const Layer& layer) {
  if (const auto* a = std::get_if<AffineLayer>(&layer)) return a->rows;
  if (const auto* n = std::get_if<LayerNormLayer>(&layer)) return n->gain.size();
  return std::nullopt;
}

void apply(const Layer& layer, PointBatch& x) {
  if (const auto* a = std::get_if<AffineLayer>(&layer)) {
    PointBatch y(x.n, a->rows);
    for (std::size_t i = 0; i < x.n; ++i) {
      const auto in = x.row(i);
      auto out = y.row(i);
      for (std::size_t r = 0; r < a->rows; ++r) {
        const double* w = a->weight.data() + r * a->cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < a->cols; ++c) acc += w[c] * in[c];
        out[r] = acc + a->bias[r];
      }
    }
    x = std::move(y);
  } else if (std::holds_alternative<ReluLayer>(layer)) {
    for (double& v : x.values) v = v > 0.0 ? v : 0.0;
  } else {
    const auto& ln = std::get<LayerNormLayer>(layer);
    const double width = static_cast<double>(x.dim);
    for (std::size_t i = 0; i < x.n; ++i) {
      auto row = x.row(i);
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= width;
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= width;
      const double inv = 1.0 / std::sqrt(var + ln.eps);
      for (std::size_t j = 0; j < x.dim; ++j) row[j] = (row[j] - mean) * inv * ln.gain[j] + ln.shift[j];
    }
  }
}

void check_width(const PointBatch& points, std::size_t expected, const char* what) {
  if (points.dim != expected) {
    throw InputError(std::string(what) + " expects points of width " + std::to_string(expected) + ", got " +
                     std::to_string(points.dim));
  }
}

std::vector<double> read_doubles(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw FormatError(std::string("model spec: \"") + field + "\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(std::string("model spec: \"") + field + "\" holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

LinearHead parse_head(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model spec: head must be an object");
  auto w = read_doubles(j.at("weight"), "weight");
  std::vector<double> b = j.contains("bias") ? read_doubles(j.at("bias"), "bias") : std::vector<double>{};
  std::size_t rows = 0;
  if (j.contains("rows")) {
    rows = j.at("rows").get<std::size_t>();
  } else if (j.contains("n_classes")) {
    rows = j.at("n_classes").get<std::size_t>();
  } else if (!b.empty()) {
    rows = b.size();
  } else {
    throw FormatError("model spec: head needs \"rows\" or a bias to fix the class count");
  }
  if (rows == 0 || w.size() % rows != 0) {
    throw FormatError("model spec: head weight of length " + std::to_string(w.size()) + " is not " +
                      std::to_string(rows) + " rows");
  }
  const std::size_t cols = j.contains("cols") ? j.at("cols").get<std::size_t>() : w.size() / rows;
  if (rows * cols != w.size()) throw FormatError("model spec: head weight length does not match rows x cols");
  return LinearHead(rows, cols, std::move(w), std::move(b));
}

nlohmann::ordered_json head_json(const LinearHead& h) {
  nlohmann::ordered_json j;
  j["rows"] = h.n_classes;
  j["cols"] = h.dim;
  j["weight"] = h.weights;
  j["bias"] = h.bias;
  return j;
}

}  // namespace

PointBatch::PointBatch(std::size_t rows, std::size_t cols, std::vector<double> v)
    : n(rows), dim(cols), values(std::move(v)) {
  if (values.size() != n * dim) throw InputError("point batch values do not match its shape");
}

PointBatch PointBatch::from_embeddings(const EmbeddingMatrix& m) {
  return PointBatch(m.n_points, m.dim, std::vector<double>(m.values.begin(), m.values.end()));
}

ClassId argmax(std::span<const double> scores) {
  ClassId best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = static_cast<ClassId>(k);
  }
  return best;
}

LinearHead::LinearHead(std::size_t classes, std::size_t d, std::vector<double> w, std::vector<double> b)
    : n_classes(classes), dim(d), weights(std::move(w)), bias(std::move(b)) {
  if (bias.empty()) bias.assign(n_classes, 0.0);
  validate();
}

void LinearHead::validate() const {
  if (n_classes < 2) throw InputError("linear head needs at least 2 classes, got " + std::to_string(n_classes));
  if (dim == 0) throw InputError("linear head has zero input width");
  if (weights.size() != n_classes * dim) {
    throw InputError("linear head weight has " + std::to_string(weights.size()) + " entries, expected " +
                     std::to_string(n_classes) + "x" + std::to_string(dim));
  }
  if (bias.size() != n_classes) {
    throw InputError("linear head bias has " + std::to_string(bias.size()) + " entries, expected " +
                     std::to_string(n_classes));
  }
  if (!all_finite(weights) || !all_finite(bias)) throw InputError("linear head has non-finite entries");
}

PointBatch LinearHead::scores(const PointBatch& points) const {
  check_width(points, dim, "linear head");
  PointBatch out(points.n, n_classes);
  for (std::size_t i = 0; i < points.n; ++i) {
    const auto z = points.row(i);
    auto a = out.row(i);
    for (std::size_t k = 0; k < n_classes; ++k) {
      const double* w = weights.data() + k * dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) acc += w[j] * z[j];
      a[k] = acc + bias[k];
    }
  }
  return out;
}

std::vector<ClassId> LinearHead::classify(const PointBatch& points) const {
  const PointBatch s = scores(points);
  std::vector<ClassId> out(s.n);
  for (std::size_t i = 0; i < s.n; ++i) out[i] = argmax(s.row(i));
  return out;
}

void FeedforwardSpec::validate() const {
  head.validate();
  std::optional<std::size_t> width;
  std::optional<std::size_t> width_from;  // layer that fixed `width`
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      if (a->rows == 0 || a->cols == 0) throw InputError(layer_desc(layer, i) + " has an empty shape");
      if (a->weight.size() != a->rows * a->cols) {
        throw InputError(layer_desc(layer, i) + " weight has " + std::to_string(a->weight.size()) + " entries");
      }
      if (a->bias.size() != a->rows) {
        throw InputError(layer_desc(layer, i) + " bias has " + std::to_string(a->bias.size()) + " entries");
      }
      if (!all_finite(a->weight) || !all_finite(a->bias)) {
        throw InputError(layer_desc(layer, i) + " has non-finite entries");
      }
    } else if (const auto* n = std::get_if<LayerNormLayer>(&layer)) {
      if (n->gain.empty() || n->gain.size() != n->shift.size()) {
        throw InputError(layer_desc(layer, i) + " gain and shift lengths differ");
      }
      if (!(n->eps > 0.0) || !std::isfinite(n->eps)) throw InputError(layer_desc(layer, i) + " needs eps > 0");
    }
    if (const auto need = input_width(layer); need && width && *need != *width) {
      throw InputError(layer_desc(layer, i) + " expects input width " + std::to_string(*need) + " but " +
                       layer_desc(layers[*width_from], *width_from) + " outputs width " + std::to_string(*width));
    }
    if (const auto out = output_width(layer)) {
      width = out;
      width_from = i;
    }
  }
  if (width && *width != head.dim) {
    throw InputError("head expects input width " + std::to_string(head.dim) + " but " +
                     layer_desc(layers[*width_from], *width_from) + " outputs width " + std::to_string(*width));
  }
  for (std::size_t b : boundaries) {
    if (b > layers.size()) {
      throw InputError("boundary " + std::to_string(b) + " out of range (network has " +
                       std::to_string(layers.size()) + " layers)");
    }
  }
}

std::size_t FeedforwardSpec::width_at(std::size_t boundary) const {
  if (boundary > layers.size()) throw InputError("boundary " + std::to_string(boundary) + " out of range");
  for (std::size_t i = boundary; i < layers.size(); ++i) {
    if (const auto w = input_width(layers[i])) return *w;
  }
  return head.dim;
}

PointBatch forward_from(const FeedforwardSpec& spec, std::size_t boundary, const PointBatch& points) {
  check_width(points, spec.width_at(boundary), ("boundary " + std::to_string(boundary)).c_str());
  PointBatch x = points;
  for (std::size_t i = boundary; i < spec.layers.size(); ++i) apply(spec.layers[i], x);
  return spec.head.scores(x);
}

PointBatch forward_to(const FeedforwardSpec& spec, std::size_t boundary, const PointBatch& inputs) {
  check_width(inputs, spec.width_at(0), "network input");
  if (boundary > spec.layers.size()) throw InputError("boundary " + std::to_string(boundary) + " out of range");
  PointBatch x = inputs;
  for (std::size_t i = 0; i < boundary; ++i) apply(spec.layers[i], x);
  return x;
}

FeedforwardSpec parse_model_spec(const nlohmann::json& doc) {
  FeedforwardSpec spec;
  try {
    if (!doc.is_object()) throw FormatError("model spec must be a JSON object");
    if (doc.contains("layers")) {
      for (const auto& lj : doc.at("layers")) {
        const std::string type = lj.at("type").get<std::string>();
        if (type == "affine") {
          AffineLayer a;
          a.rows = lj.at("rows").get<std::size_t>();
          a.cols = lj.at("cols").get<std::size_t>();
          a.weight = read_doubles(lj.at("weight"), "weight");
          a.bias = lj.contains("bias") ? read_doubles(lj.at("bias"), "bias") : std::vector<double>(a.rows, 0.0);
          spec.layers.emplace_back(std::move(a));
        } else if (type == "relu") {
          spec.layers.emplace_back(ReluLayer{});
        } else if (type == "layernorm") {
          LayerNormLayer n;
          n.gain = read_doubles(lj.at("gain"), "gain");
          n.shift = read_doubles(lj.at("shift"), "shift");
          n.eps = lj.value("eps", 1e-5);
          spec.layers.emplace_back(std::move(n));
        } else {
          throw FormatError("model spec: unknown layer type \"" + type + "\" at layer " +
                            std::to_string(spec.layers.size()));
        }
      }
    }
    spec.head = parse_head(doc.at("head"));
    if (doc.contains("boundaries")) {
      spec.boundaries = doc.at("boundaries").get<std::vector<std::size_t>>();
    } else {
      spec.boundaries = {spec.layers.size()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json model_spec_json(const FeedforwardSpec& spec) {
  nlohmann::ordered_json doc;
  doc["layers"] = nlohmann::ordered_json::array();
  for (const Layer& layer : spec.layers) {
    nlohmann::ordered_json lj;
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      lj["type"] = "affine";
      lj["rows"] = a->rows;
      lj["cols"] = a->cols;
      lj["weight"] = a->weight;
      lj["bias"] = a->bias;
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      lj["type"] = "relu";
    } else {
      const auto& n = std::get<LayerNormLayer>(layer);
      lj["type"] = "layernorm";
      lj["gain"] = n.gain;
      lj["shift"] = n.shift;
      lj["eps"] = n.eps;
    }
    doc["layers"].push_back(std::move(lj));
  }
  doc["head"] = head_json(spec.head);
  doc["boundaries"] = spec.boundaries;
  return doc;
}

FeedforwardSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model spec " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return parse_model_spec(doc);
  } catch (const InputError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_model_spec(const FeedforwardSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << model_spec_json(spec).dump() << '\n';
}

LinearHead load_linear_head(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open linear head " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.contains("head")) return parse_model_spec(doc).head;
    return parse_head(doc);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_linear_head(const LinearHead& head, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << head_json(head).dump() << '\n';
}

LinearOracle::LinearOracle(LinearHead head) : head_(std::move(head)) { head_.validate(); }

std::vector<ClassId> LinearOracle::classify(const PointBatch& points) { return head_.classify(points); }

nlohmann::ordered_json LinearOracle::describe() const {
  return {{"kind", "linear"}, {"n_classes", head_.n_classes}, {"input_dim", head_.dim}};
}

FeedforwardOracle::FeedforwardOracle(FeedforwardSpec spec, std::size_t boundary)
    : spec_(std::move(spec)), boundary_(boundary) {
  spec_.validate();
  if (boundary_ > spec_.layers.size()) {
    throw InputError("boundary " + std::to_string(boundary_) + " out of range (network has " +
                     std::to_string(spec_.layers.size()) + " layers)");
  }
}

std::size_t FeedforwardOracle::input_dim() const { return spec_.width_at(boundary_); }

std::vector<ClassId> FeedforwardOracle::classify(const PointBatch& points) {
  const PointBatch s = forward_from(spec_, boundary_, points);
  std::vector<ClassId> out(s.n);
  for (std::size_t i = 0; i < s.n; ++i) out[i] = argmax(s.row(i));
  return out;
}

nlohmann::ordered_json FeedforwardOracle::describe() const {
  return {{"kind", "feedforward"},
          {"boundary", boundary_},
          {"n_layers", spec_.layers.size()},
          {"n_classes", spec_.head.n_classes},
          {"input_dim", input_dim()}};
}

FunctionOracle::FunctionOracle(std::size_t input_dim, std::size_t n_classes, Fn fn, std::string name)
    : dim_(input_dim), n_classes_(n_classes), fn_(std::move(fn)), name_(std::move(name)) {}

std::vector<ClassId> FunctionOracle::classify(const PointBatch& points) {
  check_width(points, dim_, "oracle");
  std::lock_guard lock(mutex_);
  auto labels = fn_(points);
  if (labels.size() != points.n) {
    throw OracleError("oracle returned " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(points.n) + " points");
  }
  return labels;
}

nlohmann::ordered_json FunctionOracle::describe() const {
  return {{"kind", "function"}, {"name", name_}, {"input_dim", dim_}};
}

}  // namespace lcx

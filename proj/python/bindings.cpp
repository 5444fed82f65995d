#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "lcx/lcx.hpp"

namespace py = pybind11;
using namespace lcx;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I64Array = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

EmbeddingMatrix to_matrix(const F32Array& a) {
  if (a.ndim() != 2) throw InputError("points must be a 2-D array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  return EmbeddingMatrix(n, d, std::vector<float>(a.data(), a.data() + n * d));
}

F32Array from_matrix(const EmbeddingMatrix& m) {
  F32Array out({m.n_points, m.dim});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

LabelVector to_labels(const I64Array& a, std::optional<std::uint32_t> n_classes, const std::string& kind) {
  if (a.ndim() != 1) throw InputError("labels must be a 1-D array");
  std::vector<ClassId> l(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < l.size(); ++i) {
    const auto v = a.data()[i];
    if (v < 0 || v > 0xffffffffLL) throw InputError("label " + std::to_string(v) + " out of range");
    l[i] = static_cast<ClassId>(v);
  }
  auto out = LabelVector::from_labels(std::move(l));
  if (n_classes) out.n_classes = *n_classes;
  if (kind == "model") {
    out.kind = LabelKind::model;
  } else if (kind != "data") {
    throw InputError("label kind must be data or model");
  }
  return out;
}

I64Array from_labels(const LabelVector& l) {
  I64Array out(static_cast<py::ssize_t>(l.size()));
  for (std::size_t i = 0; i < l.size(); ++i) out.mutable_data()[i] = l.labels[i];
  return out;
}

LinearHead to_head(const F64Array& w, std::optional<F64Array> b) {
  if (w.ndim() != 2) throw InputError("head weight must be a (classes, dim) array");
  const auto c = static_cast<std::size_t>(w.shape(0));
  const auto d = static_cast<std::size_t>(w.shape(1));
  std::vector<double> bias;
  if (b) bias.assign(b->data(), b->data() + b->size());
  LinearHead h(c, d, std::vector<double>(w.data(), w.data() + c * d), bias);
  h.validate();
  return h;
}

// Python callables see (n, dim) float64 arrays and return n labels.
std::unique_ptr<ClassifierOracle> make_oracle(const py::object& oracle, std::size_t dim) {
  if (py::isinstance<LinearHead>(oracle)) return std::make_unique<LinearOracle>(oracle.cast<LinearHead>());
  if (!PyCallable_Check(oracle.ptr())) throw InputError("oracle must be a LinearHead or a callable");
  auto fn = [oracle](const PointBatch& b) {
    py::gil_scoped_acquire gil;
    try {
      F64Array pts({b.n, b.dim});
      std::copy(b.values.begin(), b.values.end(), pts.mutable_data());
      const I64Array out = oracle(pts).cast<I64Array>();
      std::vector<ClassId> labels(static_cast<std::size_t>(out.size()));
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (out.data()[i] < 0) throw OracleError("oracle returned a negative label");
        labels[i] = static_cast<ClassId>(out.data()[i]);
      }
      return labels;
    } catch (py::error_already_set& e) {
      throw OracleError(std::string("python oracle raised: ") + e.what());
    }
  };
  return std::make_unique<FunctionOracle>(dim, 0, fn, "python");
}

Symmetrization parse_sym(const std::string& s) {
  if (s == "union") return Symmetrization::union_;
  if (s == "intersection") return Symmetrization::intersection;
  throw InputError("symmetrization must be union or intersection");
}

}  // namespace

PYBIND11_MODULE(_lcx, m) {
  m.doc() = "Graph and Euclidean convexity of labelled regions (native core)";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);

  py::class_<NeighborGraph>(m, "NeighborGraph")
      .def_property_readonly("n_nodes", &NeighborGraph::n_nodes)
      .def_property_readonly("n_edges", &NeighborGraph::n_edges)
      .def("edges",
           [](const NeighborGraph& g) {
             const auto el = g.edge_list();
             I64Array u(static_cast<py::ssize_t>(el.size()));
             I64Array v(static_cast<py::ssize_t>(el.size()));
             F64Array w(static_cast<py::ssize_t>(el.size()));
             for (std::size_t i = 0; i < el.size(); ++i) {
               u.mutable_data()[i] = el[i].u;
               v.mutable_data()[i] = el[i].v;
               w.mutable_data()[i] = el[i].weight;
             }
             return py::make_tuple(u, v, w);
           },
           "Undirected edges (u, v, weight) with u < v, sorted.")
      .def("neighbors",
           [](const NeighborGraph& g, NodeId u) {
             if (u >= g.n_nodes()) throw InputError("node out of range");
             std::vector<std::pair<NodeId, double>> out;
             for (const auto& e : g.neighbors(u)) out.emplace_back(e.neighbor, e.weight);
             return out;
           })
      .def("params_json", [](const NeighborGraph& g) { return graph_params_json(g.params()).dump(); })
      .def("__eq__", [](const NeighborGraph& a, const NeighborGraph& b) { return a == b; });

  py::class_<LinearHead>(m, "LinearHead")
      .def(py::init(&to_head), py::arg("weight"), py::arg("bias") = py::none())
      .def_readonly("n_classes", &LinearHead::n_classes)
      .def_readonly("dim", &LinearHead::dim)
      .def("classify", [](const LinearHead& h, const F64Array& pts) {
        if (pts.ndim() != 2) throw InputError("points must be a 2-D array");
        PointBatch b(static_cast<std::size_t>(pts.shape(0)), static_cast<std::size_t>(pts.shape(1)),
                     std::vector<double>(pts.data(), pts.data() + pts.size()));
        const auto l = h.classify(b);
        return from_labels(LabelVector{l, static_cast<std::uint32_t>(h.n_classes), LabelKind::model});
      });

  m.def("knn_graph",
        [](const F32Array& pts, std::size_t k, const std::string& sym, std::size_t workers) {
          const auto e = to_matrix(pts);
          py::gil_scoped_release nogil;
          return build_knn_graph(e, k, parse_sym(sym), workers);
        },
        py::arg("points"), py::arg("k") = kDefaultK, py::arg("symmetrization") = "union", py::arg("workers") = 0);

  m.def("epsilon_graph",
        [](const F32Array& pts, double eps, std::size_t workers) {
          const auto e = to_matrix(pts);
          py::gil_scoped_release nogil;
          return build_epsilon_graph(e, eps, workers);
        },
        py::arg("points"), py::arg("eps"), py::arg("workers") = 0);

  m.def("shortest_path",
        [](const NeighborGraph& g, NodeId src, NodeId dst) -> py::object {
          const auto p = dijkstra_path(g, src, dst);
          if (!p.found) return py::none();
          return py::make_tuple(p.nodes, p.length);
        },
        py::arg("graph"), py::arg("source"), py::arg("target"));

  m.def("connected_components", [](const NeighborGraph& g) { return connected_components(g); });

  m.def("graph_convexity",
        [](const NeighborGraph& g, const I64Array& labels, std::optional<std::uint32_t> n_classes, std::size_t n_pairs,
           std::uint64_t seed, std::size_t workers, bool pair_scores) {
          const auto l = to_labels(labels, n_classes, "data");
          GraphConvexityParams p{n_pairs, seed, workers, pair_scores};
          py::gil_scoped_release nogil;
          return to_json(graph_convexity(g, l, p)).dump();
        },
        py::arg("graph"), py::arg("labels"), py::arg("n_classes") = py::none(),
        py::arg("n_pairs") = kDefaultPairsPerClass, py::arg("seed") = 0, py::arg("workers") = 0,
        py::arg("pair_scores") = false);

  m.def("euclidean_convexity",
        [](const F32Array& pts, const I64Array& labels, const py::object& oracle,
           std::optional<std::uint32_t> n_classes, std::size_t n_interpolants, std::size_t n_pairs,
           std::uint64_t seed, std::size_t workers, bool pair_scores) {
          const auto e = to_matrix(pts);
          const auto l = to_labels(labels, n_classes, "model");
          auto o = make_oracle(oracle, e.dim);
          EuclideanConvexityParams p;
          p.scheme.n_points = n_interpolants;
          p.n_pairs = n_pairs;
          p.seed = seed;
          p.workers = workers;
          p.keep_pair_scores = pair_scores;
          py::gil_scoped_release nogil;
          return to_json(euclidean_convexity(e, l, *o, p)).dump();
        },
        py::arg("points"), py::arg("labels"), py::arg("oracle"), py::arg("n_classes") = py::none(),
        py::arg("n_interpolants") = 10, py::arg("n_pairs") = kDefaultPairsPerClass, py::arg("seed") = 0,
        py::arg("workers") = 0, py::arg("pair_scores") = false);

  m.def("graph_baseline",
        [](const NeighborGraph& g, const I64Array& labels, std::size_t repeats, std::size_t n_pairs,
           std::uint64_t seed, std::size_t workers) {
          const auto l = to_labels(labels, std::nullopt, "data");
          GraphConvexityParams p{n_pairs, seed, workers, false};
          py::gil_scoped_release nogil;
          const auto r = random_baseline(
              [&](const LabelVector& lv) { return graph_convexity(g, lv, p).overall_mean.value_or(0.0); }, l, seed,
              repeats);
          return to_json(r).dump();
        },
        py::arg("graph"), py::arg("labels"), py::arg("repeats") = 20, py::arg("n_pairs") = kDefaultPairsPerClass,
        py::arg("seed") = 0, py::arg("workers") = 0);

  m.def("hubness",
        [](const F32Array& pts, std::size_t k, bool full, std::size_t workers) {
          const auto e = to_matrix(pts);
          py::gil_scoped_release nogil;
          return to_json(hubness(e, k, workers), full).dump();
        },
        py::arg("points"), py::arg("k") = kDefaultK, py::arg("full") = false, py::arg("workers") = 0);

  m.def("pearson",
        [](const std::vector<double>& x, const std::vector<double>& y, double alpha) {
          return to_json(pearson_fisher(x, y, alpha)).dump();
        },
        py::arg("x"), py::arg("y"), py::arg("alpha") = 0.05);

  m.def("synth",
        [](const std::string& generator, std::size_t n, std::uint64_t seed, std::size_t dim, std::size_t n_classes,
           double separation, double sigma, double gap, double bridge_width, std::size_t lobes, double radius) {
          SynthConfig c;
          c.generator = generator;
          c.n = n;
          c.seed = seed;
          c.dim = dim;
          c.n_classes = n_classes;
          c.separation = separation;
          c.sigma = sigma;
          c.gap = gap;
          c.bridge_width = bridge_width;
          c.lobes = lobes;
          c.radius = radius;
          const auto d = generate(c);
          return py::make_tuple(from_matrix(d.embeddings), from_labels(d.labels));
        },
        py::arg("generator"), py::arg("n") = 500, py::arg("seed") = 0, py::arg("dim") = 2, py::arg("n_classes") = 4,
        py::arg("separation") = 10.0, py::arg("sigma") = 1.0, py::arg("gap") = 0.0, py::arg("bridge_width") = 2.0,
        py::arg("lobes") = 2, py::arg("radius") = 1.0);

  m.def("load_embeddings",
        [](const std::string& path) {
          const auto e = load_embeddings(path);
          return py::make_tuple(from_matrix(e), e.layer_id, e.name);
        },
        py::arg("path"));
  m.def("save_embeddings",
        [](const std::string& path, const F32Array& pts, std::uint32_t layer_id, const std::string& name) {
          auto e = to_matrix(pts);
          e.layer_id = layer_id;
          e.name = name;
          save_embeddings(e, path);
        },
        py::arg("path"), py::arg("points"), py::arg("layer_id") = 0, py::arg("name") = "");
  m.def("load_labels",
        [](const std::string& path) {
          const auto l = load_labels(path);
          return py::make_tuple(from_labels(l), l.n_classes, std::string(to_string(l.kind)));
        },
        py::arg("path"));
  m.def("save_labels",
        [](const std::string& path, const I64Array& labels, std::optional<std::uint32_t> n_classes,
           const std::string& kind) { save_labels(to_labels(labels, n_classes, kind), path); },
        py::arg("path"), py::arg("labels"), py::arg("n_classes") = py::none(), py::arg("kind") = "data");
}

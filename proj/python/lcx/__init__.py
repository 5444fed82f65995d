"""Graph and Euclidean convexity of labelled regions in latent spaces.

Thin wrappers over the native core. Reports come back as plain dicts with the
same layout as the CLI's JSON output.
"""

import json as _json

try:
    from . import _lcx
except ImportError:  # in-tree build: the extension sits next to, not inside, the package
    import _lcx

InputError = _lcx.InputError
OracleError = _lcx.OracleError
NeighborGraph = _lcx.NeighborGraph
LinearHead = _lcx.LinearHead

knn_graph = _lcx.knn_graph
epsilon_graph = _lcx.epsilon_graph
shortest_path = _lcx.shortest_path
connected_components = _lcx.connected_components
synth = _lcx.synth
load_embeddings = _lcx.load_embeddings
save_embeddings = _lcx.save_embeddings
load_labels = _lcx.load_labels
save_labels = _lcx.save_labels


def graph_convexity(graph, labels, **kwargs):
    return _json.loads(_lcx.graph_convexity(graph, labels, **kwargs))


def euclidean_convexity(points, labels, oracle, **kwargs):
    """`oracle` is a LinearHead or a callable mapping an (n, d) float64 array to n labels."""
    return _json.loads(_lcx.euclidean_convexity(points, labels, oracle, **kwargs))


def graph_baseline(graph, labels, **kwargs):
    return _json.loads(_lcx.graph_baseline(graph, labels, **kwargs))


def hubness(points, **kwargs):
    return _json.loads(_lcx.hubness(points, **kwargs))


def pearson(x, y, alpha=0.05):
    return _json.loads(_lcx.pearson(list(map(float, x)), list(map(float, y)), alpha))


__all__ = [
    "InputError", "OracleError", "NeighborGraph", "LinearHead", "knn_graph", "epsilon_graph",
    "shortest_path", "connected_components", "synth", "load_embeddings", "save_embeddings",
    "load_labels", "save_labels", "graph_convexity", "euclidean_convexity", "graph_baseline",
    "hubness", "pearson",
]

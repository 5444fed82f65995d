import math
import struct

import numpy as np
import pytest

import lcx


def test_line_graph_and_path():
    pts = np.array([[0.0], [1.0], [2.0], [3.0]], dtype=np.float32)
    g = lcx.knn_graph(pts, k=1)
    u, v, w = g.edges()
    assert list(zip(u.tolist(), v.tolist())) == [(0, 1), (1, 2), (2, 3)]
    assert w.tolist() == [1.0, 1.0, 1.0]
    nodes, length = lcx.shortest_path(g, 0, 3)
    assert nodes == [0, 1, 2, 3]
    assert length == 3.0


def test_disconnected_path_is_none():
    pts = np.array([[0.0], [1.0], [10.0], [11.0]], dtype=np.float32)
    g = lcx.knn_graph(pts, k=1)
    assert lcx.shortest_path(g, 0, 3) is None
    assert lcx.connected_components(g) == [0, 0, 1, 1]


def test_graph_convexity_six_node_path():
    # Path graph 0-1-2-3-4-5 labelled A A B A A A: the ten class-A pairs average 17/24.
    pts = np.arange(6, dtype=np.float32).reshape(-1, 1)
    g = lcx.knn_graph(pts, k=1)
    r = lcx.graph_convexity(g, np.array([0, 0, 1, 0, 0, 0]), n_pairs=100)
    assert r["metric"] == "graph"
    assert r["classes"][0]["mean"] == pytest.approx(0.7083333333333334, abs=1e-15)


def test_linear_head_is_exactly_convex():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(300, 5)).astype(np.float32)
    head = lcx.LinearHead(rng.normal(size=(3, 5)), rng.normal(size=3))
    labels = head.classify(pts.astype(np.float64))
    r = lcx.euclidean_convexity(pts, labels, head, n_pairs=200)
    assert r["overall_mean"] == 1.0


def test_python_callable_oracle():
    pts = np.array([[-5, 0], [6, 0], [0, 0]], dtype=np.float32)

    def halves(z):
        return ((z[:, 0] <= 2.6) & (z[:, 0] >= -3.6)).astype(np.int64)

    r = lcx.euclidean_convexity(pts, np.array([0, 0, 1]), halves, n_classes=2, pair_scores=True)
    # Interpolants x = 5, 4, ..., -4; four of them land outside [-3.6, 2.6].
    [(a, b, score)] = r["classes"][0]["pair_scores"]
    assert (a, b) == (0, 1)
    assert score == pytest.approx(0.4, abs=1e-15)


def test_python_oracle_error_is_reported():
    pts = np.zeros((4, 2), dtype=np.float32)

    def broken(z):
        raise RuntimeError("boom")

    r = lcx.euclidean_convexity(pts, np.array([0, 0, 1, 1]), broken)
    assert r["truncated"] is True
    assert "boom" in r["error"]


def test_lceb_written_by_hand(tmp_path):
    # Independent writer for the binary layout.
    vals = np.array([[1.5, -2.0], [0.25, 4.0], [3.0, 3.0]], dtype="<f4")
    name = b"blk3"
    blob = b"LCEB" + struct.pack("<IQQII", 1, 3, 2, 7, len(name)) + name + vals.tobytes()
    (tmp_path / "e.lceb").write_bytes(blob)
    arr, layer_id, got_name = lcx.load_embeddings(str(tmp_path / "e.lceb"))
    assert layer_id == 7 and got_name == "blk3"
    np.testing.assert_array_equal(arr, vals)
    lcx.save_embeddings(str(tmp_path / "f.lceb"), vals, layer_id=7, name="blk3")
    assert (tmp_path / "f.lceb").read_bytes() == blob


def test_labels_round_trip(tmp_path):
    p = str(tmp_path / "l.lclb")
    lcx.save_labels(p, np.array([2, 0, 1, 1]), n_classes=4, kind="model")
    labels, n_classes, kind = lcx.load_labels(p)
    assert labels.tolist() == [2, 0, 1, 1]
    assert (n_classes, kind) == (4, "model")


def test_synth_deterministic_and_baseline():
    a, la = lcx.synth("blobs", n=250, seed=3, separation=0.0)
    b, lb = lcx.synth("blobs", n=250, seed=3, separation=0.0)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(la, lb)
    g = lcx.knn_graph(a, k=10)
    base = lcx.graph_baseline(g, la, repeats=5, n_pairs=500)
    assert abs(base["grand_mean"] - 0.25) < 0.05


def test_pearson_and_hubness():
    r = lcx.pearson([1, 2, 3, 4, 5, 6], [2, 1, 4, 3, 6, 5])
    assert r["r"] == pytest.approx(29 / 35, abs=1e-15)
    ring = np.array([[math.cos(i * math.pi / 6), math.sin(i * math.pi / 6)] for i in range(12)], dtype=np.float32)
    h = lcx.hubness(ring, k=2)
    assert h["robinhood"] == 0.0


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        lcx.knn_graph(np.zeros((3, 2), dtype=np.float32), k=5)

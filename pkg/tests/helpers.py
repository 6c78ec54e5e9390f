"""Shared test utilities: graph generators and gradient oracles."""

import numpy as np

from sea import autodiff as ad
from sea.autodiff import Tape
from sea.graph import WeightedGraph, connected_components
from sea.models import _forward_graph, _leaf_params, build_graph_context


def random_graph(rng, n, num_edges, weighted=True) -> WeightedGraph:
    """Random simple graph with every node covered by at least one edge."""
    edges = set()
    # a random spanning chain guarantees no isolated nodes
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        edges.add((min(a, b), max(a, b)))
    while len(edges) < max(num_edges, n - 1):
        p, q = rng.integers(0, n, 2)
        if p != q:
            edges.add((min(p, q), max(p, q)))
    pairs = sorted(edges)
    p = np.array([e[0] for e in pairs], dtype=np.int64)
    q = np.array([e[1] for e in pairs], dtype=np.int64)
    w = rng.uniform(0.5, 2.0, len(pairs)) if weighted else np.ones(len(pairs))
    return WeightedGraph(n, p, q, w)


def assert_connected(g: WeightedGraph):
    assert connected_components(g).max() == 0


def fixture_12():
    """The fixed 12-node fixture used by every gradient check."""
    rng = np.random.default_rng(7)
    n, d, c = 12, 5, 3
    g = random_graph(rng, n, 18)
    x = rng.normal(size=(n, d))
    labels = rng.integers(0, c, n)
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[:8]] = True
    return g, x, labels, mask, d, c


def _loss(model, ctx, x, labels, mask):
    backup = {k: v.copy() for k, v in model.buffers.items()}
    with Tape() as tape:
        leaves = _leaf_params(tape, model)
        _, logits = _forward_graph(
            model, leaves, tape.leaf(x), ctx, True, np.random.default_rng(0)
        )
        value = float(ad.masked_cross_entropy(logits, labels, mask).value)
    for k, v in model.buffers.items():
        v[:] = backup[k]
    return value


def finite_difference_worst(model, g, x, labels, mask, step=1e-5):
    """Max relative error between tape gradients and central differences."""
    ctx = build_graph_context(model.arch, g)
    backup = {k: v.copy() for k, v in model.buffers.items()}
    with Tape() as tape:
        leaves = _leaf_params(tape, model)
        _, logits = _forward_graph(
            model, leaves, tape.leaf(x), ctx, True, np.random.default_rng(0)
        )
        loss = ad.masked_cross_entropy(logits, labels, mask)
        tape.backward(loss)
    grads = {k: node.grad for k, node in leaves.items()}
    for k, v in model.buffers.items():
        v[:] = backup[k]

    worst = 0.0
    for name, arr in model.params.items():
        numeric = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + step
            up = _loss(model, ctx, x, labels, mask)
            arr[idx] = orig - step
            down = _loss(model, ctx, x, labels, mask)
            arr[idx] = orig
            numeric[idx] = (up - down) / (2.0 * step)
        analytic = grads[name]
        if analytic is None:
            analytic = np.zeros_like(arr)
        scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-8)
        worst = max(worst, np.abs(analytic - numeric).max() / scale)
    return worst

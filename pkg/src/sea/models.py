"""Weighted GCN, GAT, and GraphSAGE forward passes over the autodiff tape.

Architectures are fixed-size: GCN d→64→C with ReLU, GAT with four 8-wide
attention heads concatenated then a single-head output layer (ELU between),
GraphSAGE d→32→C with weighted-mean neighbor aggregation, concatenation, and
BatchNorm after ReLU. Edge weights enter GCN through the normalized adjacency,
GAT by scaling unnormalized attention scores before softmax, and GraphSAGE
through the weighted-mean aggregate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node, Tape
from .data import Dataset
from .errors import ConfigError, EmptyMask, IsolatedNodeWarning, ShapeMismatch
from .graph import WeightedGraph
from .sparse import SparseMatrix

__all__ = [
    "GnnModel",
    "create_model",
    "normalize_adjacency",
    "gcn_forward",
    "gat_forward",
    "sage_forward",
    "extract_embeddings",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
]

ARCHS = ("GCN", "GAT", "GraphSAGE")

_GAT_HEADS = 4
_GAT_HEAD_DIM = 8
_GCN_HIDDEN = 64
_SAGE_HIDDEN = 32

_DEFAULT_DROPOUT = {"GCN": 0.0, "GAT": 0.2, "GraphSAGE": 0.0}


@dataclass(eq=False)
class GnnModel:
    """Parameter container for one architecture instance."""

    arch: str
    in_dim: int
    num_classes: int
    hidden_dim: int
    heads: int
    dropout: float
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray]

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ConfigError(f"unknown architecture {self.arch!r}")
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise ShapeMismatch(f"parameter {name} contains non-finite values")


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def create_model(
    arch: str,
    in_dim: int,
    num_classes: int,
    seed: int = 0,
    dropout: float | None = None,
) -> GnnModel:
    """Glorot-uniform weights, zero biases, seeded."""
    if arch not in ARCHS:
        raise ConfigError(f"unknown architecture {arch!r}")
    if in_dim < 1 or num_classes < 2:
        raise ConfigError("need in_dim >= 1 and num_classes >= 2")
    rng = np.random.default_rng(seed)
    if dropout is None:
        dropout = _DEFAULT_DROPOUT[arch]
    params: dict[str, np.ndarray] = {}
    buffers: dict[str, np.ndarray] = {}

    if arch == "GCN":
        hidden, heads = _GCN_HIDDEN, 1
        params["w1"] = _glorot(rng, (in_dim, hidden))
        params["b1"] = np.zeros(hidden)
        params["w2"] = _glorot(rng, (hidden, num_classes))
        params["b2"] = np.zeros(num_classes)
    elif arch == "GAT":
        hidden, heads = _GAT_HEADS * _GAT_HEAD_DIM, _GAT_HEADS
        for h in range(heads):
            params[f"w1_h{h}"] = _glorot(rng, (in_dim, _GAT_HEAD_DIM))
            params[f"a1_ctr_h{h}"] = _glorot(rng, (_GAT_HEAD_DIM, 1))
            params[f"a1_nbr_h{h}"] = _glorot(rng, (_GAT_HEAD_DIM, 1))
        params["b1"] = np.zeros(hidden)
        params["w2"] = _glorot(rng, (hidden, num_classes))
        params["a2_ctr"] = _glorot(rng, (num_classes, 1))
        params["a2_nbr"] = _glorot(rng, (num_classes, 1))
        params["b2"] = np.zeros(num_classes)
    else:
        hidden, heads = _SAGE_HIDDEN, 1
        params["w1"] = _glorot(rng, (2 * in_dim, hidden))
        params["b1"] = np.zeros(hidden)
        params["bn_gamma"] = np.ones(hidden)
        params["bn_beta"] = np.zeros(hidden)
        params["w2"] = _glorot(rng, (2 * hidden, num_classes))
        params["b2"] = np.zeros(num_classes)
        buffers["bn_mean"] = np.zeros(hidden)
        buffers["bn_var"] = np.ones(hidden)

    return GnnModel(arch, in_dim, num_classes, hidden, heads, dropout, params, buffers)


def normalize_adjacency(g: WeightedGraph) -> SparseMatrix:
    """Symmetric normalization of the weighted adjacency with unit self-loops."""
    degrees = g.degrees() + 1.0
    inv_sqrt = 1.0 / np.sqrt(degrees)
    nodes = np.arange(g.n, dtype=np.int64)
    rows = np.concatenate([g.p, g.q, nodes])
    cols = np.concatenate([g.q, g.p, nodes])
    vals = np.concatenate([g.w, g.w, np.ones(g.n)]) * inv_sqrt[rows] * inv_sqrt[cols]
    return SparseMatrix.from_coo(g.n, rows, cols, vals, symmetric=True)


def _mean_aggregator(g: WeightedGraph) -> SparseMatrix:
    """Row-stochastic D_w^{-1} A_w; isolated nodes get an all-zero row."""
    degrees = g.degrees()
    isolated = np.nonzero(degrees == 0.0)[0]
    if isolated.size:
        warnings.warn(
            f"{isolated.size} isolated node(s); aggregates set to zero",
            IsolatedNodeWarning,
            stacklevel=3,
        )
    inv = np.zeros(g.n)
    np.divide(1.0, degrees, out=inv, where=degrees > 0.0)
    rows = np.concatenate([g.p, g.q])
    cols = np.concatenate([g.q, g.p])
    vals = np.concatenate([g.w, g.w]) * inv[rows]
    return SparseMatrix.from_coo(g.n, rows, cols, vals)


def _directed_edges(g: WeightedGraph):
    """Both directions of each edge plus unit self-loops, sorted by target."""
    nodes = np.arange(g.n, dtype=np.int64)
    tgt = np.concatenate([g.p, g.q, nodes])
    src = np.concatenate([g.q, g.p, nodes])
    wgt = np.concatenate([g.w, g.w, np.ones(g.n)])
    order = np.lexsort((src, tgt))
    return tgt[order], src[order], wgt[order]


def build_graph_context(arch: str, g: WeightedGraph):
    """Precompute the per-graph structure each architecture consumes."""
    if arch == "GCN":
        return normalize_adjacency(g)
    if arch == "GAT":
        return _directed_edges(g)
    if arch == "GraphSAGE":
        return _mean_aggregator(g)
    raise ConfigError(f"unknown architecture {arch!r}")


def _dropout(x: Node, rate: float, training: bool, rng) -> Node:
    if not training or rate <= 0.0:
        return x
    keep = rng.random(x.value.shape) >= rate
    return ad.scale_const(x, keep / (1.0 - rate))


def _leaf_params(tape: Tape, model: GnnModel) -> dict[str, Node]:
    return {name: tape.leaf(value) for name, value in model.params.items()}


def _gat_attention_layer(
    x: Node,
    head_params: list[tuple[Node, Node, Node]],
    edges,
    n: int,
    dropout: float,
    training: bool,
    rng,
) -> Node:
    """One multi-head attention layer; heads concatenated along features."""
    tgt, src, wgt = edges
    tape = ad.active_tape()
    outputs = []
    for w, a_ctr, a_nbr in head_params:
        h = ad.matmul(x, w)
        score = ad.add(
            ad.gather_rows(ad.matmul(h, a_ctr), tgt),
            ad.gather_rows(ad.matmul(h, a_nbr), src),
        )
        e = ad.leaky_relu(score, 0.2)
        # softmax is shift invariant, so the per-target max is a constant
        shift = np.full((n, 1), -np.inf)
        np.maximum.at(shift, tgt, e.value)
        ex = ad.exp(ad.sub(e, tape.leaf(shift[tgt])))
        num = ad.scale_const(ex, wgt[:, None])
        den = ad.segment_sum(num, tgt, n)
        alpha = ad.div(num, ad.gather_rows(den, tgt))
        alpha = _dropout(alpha, dropout, training, rng)
        msg = ad.mul(alpha, ad.gather_rows(h, src))
        outputs.append(ad.segment_sum(msg, tgt, n))
    return outputs[0] if len(outputs) == 1 else ad.concat_cols(outputs)


def _forward_graph(
    model: GnnModel,
    p: dict[str, Node],
    x: Node,
    ctx,
    training: bool,
    rng,
) -> tuple[Node, Node]:
    """Build the operator graph; returns (post-activation hidden, logits)."""
    tape = ad.active_tape()
    if model.arch == "GCN":
        x = _dropout(x, model.dropout, training, rng)
        hidden = ad.relu(
            ad.add(ad.spmm(ctx, ad.matmul(x, p["w1"])), p["b1"])
        )
        h = _dropout(hidden, model.dropout, training, rng)
        logits = ad.add(ad.spmm(ctx, ad.matmul(h, p["w2"])), p["b2"])
        return hidden, logits

    if model.arch == "GAT":
        n = x.value.shape[0]
        x = _dropout(x, model.dropout, training, rng)
        heads = [
            (p[f"w1_h{h}"], p[f"a1_ctr_h{h}"], p[f"a1_nbr_h{h}"])
            for h in range(model.heads)
        ]
        z = _gat_attention_layer(x, heads, ctx, n, model.dropout, training, rng)
        hidden = ad.elu(ad.add(z, p["b1"]))
        h = _dropout(hidden, model.dropout, training, rng)
        out = _gat_attention_layer(
            h, [(p["w2"], p["a2_ctr"], p["a2_nbr"])], ctx, n, model.dropout,
            training, rng,
        )
        logits = ad.add(out, p["b2"])
        return hidden, logits

    x = _dropout(x, model.dropout, training, rng)
    agg = ad.spmm(ctx, x)
    z1 = ad.add(ad.matmul(ad.concat_cols([x, agg]), p["w1"]), p["b1"])
    hidden = ad.batchnorm(
        ad.relu(z1),
        p["bn_gamma"],
        p["bn_beta"],
        model.buffers["bn_mean"],
        model.buffers["bn_var"],
        training,
    )
    h = _dropout(hidden, model.dropout, training, rng)
    agg2 = ad.spmm(ctx, h)
    logits = ad.add(ad.matmul(ad.concat_cols([h, agg2]), p["w2"]), p["b2"])
    return hidden, logits


def _check_mode(mode: str) -> bool:
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', not {mode!r}")
    return mode == "train"


def _run_forward(model: GnnModel, x: np.ndarray, ctx, mode: str, rng):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.in_dim:
        raise ShapeMismatch(
            f"features must be (n, {model.in_dim}), got {x.shape}"
        )
    training = _check_mode(mode)
    if rng is None:
        rng = np.random.default_rng(0)
    with Tape() as tape:
        hidden, logits = _forward_graph(
            model, _leaf_params(tape, model), tape.leaf(x), ctx, training, rng
        )
    return hidden.value, logits.value


def gcn_forward(
    model: GnnModel,
    x: np.ndarray,
    a_norm: SparseMatrix,
    mode: str = "eval",
    rng=None,
) -> np.ndarray:
    if model.arch != "GCN":
        raise ConfigError("gcn_forward requires a GCN model")
    return _run_forward(model, x, a_norm, mode, rng)[1]


def gat_forward(
    model: GnnModel,
    x: np.ndarray,
    g: WeightedGraph,
    mode: str = "eval",
    rng=None,
) -> np.ndarray:
    if model.arch != "GAT":
        raise ConfigError("gat_forward requires a GAT model")
    return _run_forward(model, x, _directed_edges(g), mode, rng)[1]


def sage_forward(
    model: GnnModel,
    x: np.ndarray,
    g: WeightedGraph,
    mode: str = "eval",
    rng=None,
) -> np.ndarray:
    if model.arch != "GraphSAGE":
        raise ConfigError("sage_forward requires a GraphSAGE model")
    return _run_forward(model, x, _mean_aggregator(g), mode, rng)[1]


def extract_embeddings(
    model: GnnModel, data: Dataset, layer: str = "hidden"
) -> np.ndarray:
    """Eval-mode representation of every node: hidden layer or logits."""
    if layer not in ("hidden", "logits"):
        raise ConfigError(f"layer must be 'hidden' or 'logits', not {layer!r}")
    ctx = build_graph_context(model.arch, data.graph)
    hidden, logits = _run_forward(model, data.features, ctx, "eval", None)
    return hidden if layer == "hidden" else logits


def evaluate(model: GnnModel, data: Dataset, mask: np.ndarray) -> float:
    """Argmax-match rate over masked nodes; logit ties pick the lowest class."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (data.n,):
        raise ShapeMismatch("mask length must equal node count")
    if not mask.any():
        raise EmptyMask("evaluation mask selects no nodes")
    ctx = build_graph_context(model.arch, data.graph)
    _, logits = _run_forward(model, data.features, ctx, "eval", None)
    predictions = np.argmax(logits[mask], axis=1)
    return float(np.mean(predictions == data.labels[mask]))


def save_checkpoint(model: GnnModel, path: str) -> None:
    """Single ``.npz`` with an architecture descriptor; round-trips bitwise."""
    arrays = {f"param__{k}": v for k, v in model.params.items()}
    arrays.update({f"buffer__{k}": v for k, v in model.buffers.items()})
    np.savez(
        path,
        arch=np.array(model.arch, dtype="U16"),
        dims=np.array(
            [model.in_dim, model.num_classes, model.hidden_dim, model.heads],
            dtype=np.int64,
        ),
        dropout=np.float64(model.dropout),
        **arrays,
    )


def load_checkpoint(path: str) -> GnnModel:
    with np.load(path) as blob:
        arch = str(blob["arch"])
        in_dim, num_classes, hidden_dim, heads = (int(v) for v in blob["dims"])
        params = {}
        buffers = {}
        for key in blob.files:
            if key.startswith("param__"):
                params[key[len("param__") :]] = blob[key]
            elif key.startswith("buffer__"):
                buffers[key[len("buffer__") :]] = blob[key]
        return GnnModel(
            arch,
            in_dim,
            num_classes,
            hidden_dim,
            heads,
            float(blob["dropout"]),
            params,
            buffers,
        )

"""Dataset ingestion, splits, and synthetic fixtures.

The Cora loader consumes the published ``.content``/``.cites`` text formats.
Node order follows content-file line order; class ids follow sorted class-name
order. Citations are merged into an undirected simple graph with unit weights.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ClassTooSmall,
    ConfigError,
    CorruptCache,
    MalformedRow,
    ShapeMismatch,
    UnknownNodeIdWarning,
)
from .graph import WeightedGraph
from .knn import build_knn

__all__ = [
    "Dataset",
    "load_cora",
    "make_split",
    "synthetic_blobs",
    "save_dataset",
    "load_dataset",
]


@dataclass(eq=False)
class Dataset:
    """A labeled graph with features and train/val/test masks."""

    graph: WeightedGraph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeMismatch("features must be a 2-D matrix")
        n = self.features.shape[0]
        if self.graph.n != n or self.labels.shape != (n,):
            raise ShapeMismatch("graph, features, and labels disagree on node count")
        if not np.all(np.isfinite(self.features)):
            raise ShapeMismatch("features contain non-finite entries")
        if self.labels.size and self.labels.min() < 0:
            raise ShapeMismatch("labels must be non-negative class ids")
        masks = []
        for name in ("train_mask", "val_mask", "test_mask"):
            m = np.asarray(getattr(self, name), dtype=bool)
            if m.shape != (n,):
                raise ShapeMismatch(f"{name} must have shape ({n},)")
            masks.append(m)
        self.train_mask, self.val_mask, self.test_mask = masks
        overlap = (
            self.train_mask.astype(np.int64)
            + self.val_mask.astype(np.int64)
            + self.test_mask.astype(np.int64)
        )
        if overlap.max(initial=0) > 1:
            raise ShapeMismatch("train/val/test masks must be pairwise disjoint")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        if self.class_names is not None:
            return len(self.class_names)
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def with_masks(self, train, val, test) -> "Dataset":
        return replace(self, train_mask=train, val_mask=val, test_mask=test)

    def with_graph(self, graph: WeightedGraph) -> "Dataset":
        return replace(self, graph=graph)


def _content_rows(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            yield line_no, line.split()


def load_cora(content_path: str, cites_path: str) -> Dataset:
    """Parse ``<id> <features...> <label>`` and ``<cited> <citing>`` files."""
    ids: dict[str, int] = {}
    feature_rows: list[np.ndarray] = []
    label_names: list[str] = []
    width = None
    for line_no, tokens in _content_rows(content_path):
        if len(tokens) < 3:
            raise MalformedRow(content_path, line_no, "expected id, features, label")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise MalformedRow(
                content_path,
                line_no,
                f"expected {width} columns, found {len(tokens)}",
            )
        paper_id = tokens[0]
        if paper_id in ids:
            raise MalformedRow(content_path, line_no, f"duplicate id {paper_id!r}")
        try:
            row = np.array(tokens[1:-1], dtype=np.float64)
        except ValueError:
            raise MalformedRow(content_path, line_no, "non-numeric feature value")
        if not np.all(np.isfinite(row)):
            raise MalformedRow(content_path, line_no, "non-finite feature value")
        ids[paper_id] = len(ids)
        feature_rows.append(row)
        label_names.append(tokens[-1])

    n = len(feature_rows)
    if n < 2:
        raise MalformedRow(content_path, 0, "need at least two content rows")
    features = np.vstack(feature_rows)
    class_names = tuple(sorted(set(label_names)))
    class_index = {name: i for i, name in enumerate(class_names)}
    labels = np.array([class_index[name] for name in label_names], dtype=np.int64)

    keys = []
    dropped = 0
    for line_no, tokens in _content_rows(cites_path):
        if len(tokens) != 2:
            raise MalformedRow(cites_path, line_no, "expected exactly two ids")
        cited, citing = tokens
        if cited not in ids or citing not in ids:
            dropped += 1
            continue
        p, q = ids[cited], ids[citing]
        if p == q:
            continue
        lo, hi = (p, q) if p < q else (q, p)
        keys.append(lo * n + hi)
    if dropped:
        warnings.warn(
            f"dropped {dropped} citation(s) referencing unknown paper ids",
            UnknownNodeIdWarning,
            stacklevel=2,
        )
    unique = np.unique(np.array(keys, dtype=np.int64))
    p = (unique // n).astype(np.int64)
    q = (unique % n).astype(np.int64)
    graph = WeightedGraph(n, p, q, np.ones(unique.size))

    empty = np.zeros(n, dtype=bool)
    return Dataset(graph, features, labels, empty, empty, empty, class_names)


def make_split(
    n: int,
    labels: np.ndarray,
    strategy: str = "random",
    seed: int = 0,
    train_frac: float = 0.6,
    val_frac: float = 0.2,
):
    """Return (train, val, test) boolean masks over ``n`` nodes."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ShapeMismatch("labels must have one entry per node")
    classes = int(labels.max()) + 1
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)

    if strategy == "planetoid":
        for c in range(classes):
            members = np.nonzero(labels == c)[0]
            if members.size < 20:
                raise ClassTooSmall(f"class {c} has {members.size} nodes, needs 20")
            train[members[:20]] = True
        rest = np.nonzero(~train)[0]
        val[rest[:500]] = True
        remaining = np.nonzero(~train & ~val)[0]
        test[remaining[-1000:]] = True
        return train, val, test

    if strategy != "random":
        raise ConfigError(f"unknown split strategy {strategy!r}")
    if not (0.0 < train_frac and 0.0 <= val_frac and train_frac + val_frac < 1.0):
        raise ConfigError("split fractions must be positive and sum below 1")
    rng = np.random.default_rng(seed)
    for c in range(classes):
        members = np.nonzero(labels == c)[0]
        perm = members[rng.permutation(members.size)]
        n_train = int(perm.size * train_frac + 0.5)
        n_val = int(perm.size * val_frac + 0.5)
        n_test = perm.size - n_train - n_val
        if n_train < 1 or n_test < 1 or (val_frac > 0.0 and n_val < 1):
            raise ClassTooSmall(
                f"class {c} with {perm.size} nodes cannot fill every split"
            )
        train[perm[:n_train]] = True
        val[perm[n_train : n_train + n_val]] = True
        test[perm[n_train + n_val :]] = True
    return train, val, test


def synthetic_blobs(
    n: int, d: int, classes: int, noise: float, seed: int = 0
) -> Dataset:
    """Gaussian blobs with a k=5 kNN graph; labels follow blob membership."""
    if n < classes:
        raise ConfigError("need at least one node per class")
    rng = np.random.default_rng(seed)
    centers = 4.0 * rng.normal(size=(classes, d))
    labels = np.arange(n, dtype=np.int64) % classes
    features = centers[labels] + noise * rng.normal(size=(n, d))
    graph = build_knn(features, k=5, metric="euclidean")
    train, val, test = make_split(n, labels, "random", seed=seed)
    names = tuple(f"blob_{c}" for c in range(classes))
    return Dataset(graph, features, labels, train, val, test, names)


_CACHE_FIELDS = ("edges_p", "edges_q", "weights", "features", "labels", "masks")


def _dataset_digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in _CACHE_FIELDS:
        h.update(name.encode())
        h.update(np.ascontiguousarray(arrays[name]).tobytes())
    return h.hexdigest()


def save_dataset(dataset: Dataset, path: str) -> None:
    """Serialize to an ``.npz`` container with an integrity checksum."""
    arrays = {
        "edges_p": dataset.graph.p,
        "edges_q": dataset.graph.q,
        "weights": dataset.graph.w,
        "features": dataset.features,
        "labels": dataset.labels,
        "masks": np.stack([dataset.train_mask, dataset.val_mask, dataset.test_mask]),
    }
    names = list(dataset.class_names) if dataset.class_names is not None else []
    np.savez(
        path,
        **arrays,
        n=np.int64(dataset.n),
        class_names=np.array(names, dtype="U64"),
        checksum=np.array(_dataset_digest(arrays), dtype="U64"),
    )


def load_dataset(path: str) -> Dataset:
    with np.load(path) as blob:
        arrays = {name: blob[name] for name in _CACHE_FIELDS}
        if str(blob["checksum"]) != _dataset_digest(arrays):
            raise CorruptCache(f"checksum mismatch in {path}")
        n = int(blob["n"])
        names = tuple(str(s) for s in blob["class_names"])
        graph = WeightedGraph(
            n, arrays["edges_p"], arrays["edges_q"], arrays["weights"]
        )
        masks = arrays["masks"].astype(bool)
        return Dataset(
            graph,
            arrays["features"],
            arrays["labels"],
            masks[0],
            masks[1],
            masks[2],
            names or None,
        )

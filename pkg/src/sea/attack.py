"""Attack orchestration: scoring pipeline, reweighting, and baselines.

The pipeline trains a model on the clean graph, embeds the nodes, builds the
input-side and latent-side kNN graphs, solves the Laplacian pencil for the
top-s eigenpairs, scores every dataset edge, and raises the weights of the
top-scoring fraction from 1 to ``multiplier``. Topology never changes: the
edge set before and after an attack is asserted identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ConfigError, ConfigMismatch, InvalidFraction, TopologyViolation
from .graph import WeightedGraph, build_laplacian
from .knn import build_knn
from .models import create_model, evaluate, extract_embeddings
from .spectral import EdgeScore, generalized_eigenpairs, rank_and_select, spade_scores
from .training import TrainConfig, train

__all__ = [
    "AttackPlan",
    "AttackReport",
    "apply_attack",
    "run_sea",
    "run_random_baseline",
    "compare",
    "write_comparison_csv",
    "write_plot_csv",
]

MODES = ("evasion", "poisoning")


@dataclass(frozen=True)
class AttackPlan:
    """Which edges to reweight, by how much, and under which threat model."""

    target_edges: tuple[tuple[int, int], ...]
    weight_multiplier: float = 2.0
    mode: str = "evasion"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, not {self.mode!r}")
        if not self.weight_multiplier > 0.0:
            raise ConfigError("weight_multiplier must be positive")
        if len(set(self.target_edges)) != len(self.target_edges):
            raise ConfigError("target_edges contains duplicates")


@dataclass(frozen=True)
class AttackReport:
    """One attack outcome in Table-1 terms."""

    arch: str
    seed: int
    original_accuracy: float
    attacked_accuracy: float
    degradation_pp: float
    budget_fraction: float
    mode: str
    edge_count_attacked: int
    multiplier: float = 2.0
    dataset: str = ""
    trial_index: int | None = None
    trials: int | None = None

    def __post_init__(self):
        expected = (self.original_accuracy - self.attacked_accuracy) * 100.0
        if abs(self.degradation_pp - expected) > 1e-9:
            raise ConfigError(
                f"degradation_pp {self.degradation_pp} inconsistent with "
                f"accuracies ({expected})"
            )

    def to_json_dict(self) -> dict:
        out = {
            "dataset": self.dataset,
            "arch": self.arch,
            "mode": self.mode,
            "seed": self.seed,
            "fraction": self.budget_fraction,
            "multiplier": self.multiplier,
            "edges_attacked": self.edge_count_attacked,
            "original_accuracy": self.original_accuracy,
            "attacked_accuracy": self.attacked_accuracy,
            "degradation_pp": self.degradation_pp,
        }
        if self.trial_index is not None:
            out["trial_index"] = self.trial_index
        if self.trials is not None:
            out["trials"] = self.trials
        return out


def _budget(num_edges: int, fraction: float) -> int:
    if not (0.0 < fraction <= 1.0):
        raise InvalidFraction(f"fraction must be in (0, 1], got {fraction}")
    return math.ceil(fraction * num_edges)


def apply_attack(graph: WeightedGraph, plan: AttackPlan) -> WeightedGraph:
    """Reweight the planned edges; raises if any target is not a graph edge."""
    if not plan.target_edges:
        return graph.with_weights(graph.w.copy())
    keys = graph.p * graph.n + graph.q
    targets = np.array(
        [min(p, q) * graph.n + max(p, q) for p, q in plan.target_edges],
        dtype=np.int64,
    )
    idx = np.searchsorted(keys, targets)
    bad = (idx >= keys.size) | (keys[np.minimum(idx, keys.size - 1)] != targets)
    if np.any(bad):
        p, q = plan.target_edges[int(np.nonzero(bad)[0][0])]
        raise TopologyViolation(f"target edge ({p}, {q}) is not in the graph")
    weights = graph.w.copy()
    weights[idx] *= plan.weight_multiplier
    return graph.with_weights(weights)


def _verify_topology(
    before: WeightedGraph, after: WeightedGraph, expected_changed: int
) -> None:
    if (
        before.n != after.n
        or not np.array_equal(before.p, after.p)
        or not np.array_equal(before.q, after.q)
    ):
        raise TopologyViolation("edge set changed during attack")
    changed = int(np.count_nonzero(before.w != after.w))
    if changed != expected_changed:
        raise TopologyViolation(
            f"{changed} weights changed, expected {expected_changed}"
        )


def _fresh_trained(data: Dataset, arch: str, cfg: TrainConfig):
    model = create_model(
        arch, data.num_features, data.num_classes, seed=cfg.seed, dropout=cfg.dropout
    )
    model, trace = train(model, data, cfg)
    return model, trace


def run_sea(
    data: Dataset,
    arch: str,
    cfg: TrainConfig,
    k: int = 50,
    s: int = 20,
    fraction: float = 0.10,
    mode: str = "evasion",
    multiplier: float = 2.0,
    input_graph: WeightedGraph | None = None,
    embed_layer: str = "hidden",
    metric: str = "euclidean",
    pretrained=None,
    details: dict | None = None,
) -> AttackReport:
    """Full pipeline against one architecture.

    ``input_graph`` may carry a precomputed kNN graph of the raw features
    (it is model independent, so sweeps over seeds and architectures can
    share it). ``pretrained`` skips the clean-graph training phase. When
    ``details`` is a dict it receives the trained model, the full score
    list, and the selected edges.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, not {mode!r}")
    budget = _budget(data.graph.num_edges, fraction)

    if pretrained is None:
        model, _ = _fresh_trained(data, arch, cfg)
    else:
        if pretrained.arch != arch:
            raise ConfigMismatch(
                f"checkpoint arch {pretrained.arch!r} does not match {arch!r}"
            )
        model = pretrained
    original = evaluate(model, data, data.test_mask)

    embeddings = extract_embeddings(model, data, embed_layer)
    if input_graph is None:
        input_graph = build_knn(data.features, k, metric)
    latent_graph = build_knn(embeddings, k, metric)
    input_lap = build_laplacian(input_graph)
    latent_lap = build_laplacian(latent_graph)
    embedding = generalized_eigenpairs(input_lap, latent_lap, s, seed=cfg.seed)

    pairs = data.graph.edge_pairs()
    values = spade_scores(embedding, pairs)
    scores = [
        EdgeScore((int(p), int(q)), float(v)) for (p, q), v in zip(pairs, values)
    ]
    selected = rank_and_select(scores, fraction)
    plan = AttackPlan(tuple(e.edge for e in selected), multiplier, mode)
    attacked_graph = apply_attack(data.graph, plan)
    expected_changed = 0 if multiplier == 1.0 else len(plan.target_edges)
    _verify_topology(data.graph, attacked_graph, expected_changed)
    attacked_data = data.with_graph(attacked_graph)

    if mode == "evasion":
        attacked = evaluate(model, attacked_data, data.test_mask)
    else:
        retrained, _ = _fresh_trained(attacked_data, arch, cfg)
        attacked = evaluate(retrained, attacked_data, data.test_mask)

    if details is not None:
        details["model"] = model
        details["scores"] = scores
        details["selected"] = selected
        details["embedding"] = embedding
    assert len(plan.target_edges) == budget
    return AttackReport(
        arch=arch,
        seed=cfg.seed,
        original_accuracy=original,
        attacked_accuracy=attacked,
        degradation_pp=(original - attacked) * 100.0,
        budget_fraction=fraction,
        mode=mode,
        edge_count_attacked=budget,
        multiplier=multiplier,
    )


def run_random_baseline(
    data: Dataset,
    arch: str,
    cfg: TrainConfig,
    fraction: float = 0.10,
    trials: int = 10,
    mode: str = "evasion",
    multiplier: float = 2.0,
) -> tuple[list[AttackReport], AttackReport]:
    """Uniform random edge selection, one report per trial plus the mean."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, not {mode!r}")
    num_edges = data.graph.num_edges
    budget = _budget(num_edges, fraction)
    pairs = data.graph.edge_pairs()

    clean_model = None
    if mode == "evasion":
        clean_model, _ = _fresh_trained(data, arch, cfg)
        original = evaluate(clean_model, data, data.test_mask)

    reports = []
    for trial in range(trials):
        rng = np.random.default_rng(cfg.seed + trial)
        chosen = rng.choice(num_edges, size=budget, replace=False)
        plan = AttackPlan(
            tuple((int(pairs[i, 0]), int(pairs[i, 1])) for i in chosen),
            multiplier,
            mode,
        )
        attacked_graph = apply_attack(data.graph, plan)
        expected_changed = 0 if multiplier == 1.0 else budget
        _verify_topology(data.graph, attacked_graph, expected_changed)
        attacked_data = data.with_graph(attacked_graph)
        if mode == "evasion":
            attacked = evaluate(clean_model, attacked_data, data.test_mask)
        else:
            retrained, _ = _fresh_trained(attacked_data, arch, cfg)
            original = evaluate(retrained, data, data.test_mask)
            attacked = evaluate(retrained, attacked_data, data.test_mask)
        reports.append(
            AttackReport(
                arch=arch,
                seed=cfg.seed,
                original_accuracy=original,
                attacked_accuracy=attacked,
                degradation_pp=(original - attacked) * 100.0,
                budget_fraction=fraction,
                mode=mode,
                edge_count_attacked=budget,
                multiplier=multiplier,
                trial_index=trial,
            )
        )

    mean_original = float(np.mean([r.original_accuracy for r in reports]))
    mean_attacked = float(np.mean([r.attacked_accuracy for r in reports]))
    summary = AttackReport(
        arch=arch,
        seed=cfg.seed,
        original_accuracy=mean_original,
        attacked_accuracy=mean_attacked,
        degradation_pp=(mean_original - mean_attacked) * 100.0,
        budget_fraction=fraction,
        mode=mode,
        edge_count_attacked=budget,
        multiplier=multiplier,
        trials=trials,
    )
    return reports, summary


@dataclass(frozen=True)
class ComparisonRow:
    arch: str
    original_pct: float
    sea_drop_pp: float
    random_drop_pp: float


def compare(sea: AttackReport, baseline_mean: AttackReport) -> ComparisonRow:
    """One Table-1-style row; both reports must share their configuration."""
    for field in ("arch", "mode", "budget_fraction", "multiplier"):
        if getattr(sea, field) != getattr(baseline_mean, field):
            raise ConfigMismatch(
                f"{field} differs: {getattr(sea, field)!r} vs "
                f"{getattr(baseline_mean, field)!r}"
            )
    return ComparisonRow(
        arch=sea.arch,
        original_pct=sea.original_accuracy * 100.0,
        sea_drop_pp=sea.degradation_pp,
        random_drop_pp=baseline_mean.degradation_pp,
    )


def write_comparison_csv(rows: list[ComparisonRow], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("arch,original,sea_drop,random_drop_mean\n")
        for r in rows:
            fh.write(
                f"{r.arch},{r.original_pct:.6f},{r.sea_drop_pp:.6f},"
                f"{r.random_drop_pp:.6f}\n"
            )


def write_plot_csv(rows: list[ComparisonRow], path: str) -> None:
    """Long-format records for external bar-chart plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("arch,method,degradation_pp\n")
        for r in rows:
            fh.write(f"{r.arch},sea,{r.sea_drop_pp:.6f}\n")
            fh.write(f"{r.arch},random,{r.random_drop_pp:.6f}\n")

"""Full-batch training with Adam and masked cross-entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape
from .data import Dataset
from .errors import ConfigError, NonFiniteLoss
from .models import GnnModel, _forward_graph, _leaf_params, build_graph_context, evaluate

__all__ = ["TrainConfig", "Adam", "train"]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.005
    weight_decay: float = 5e-4
    seed: int = 0
    dropout: float | None = None

    def __post_init__(self):
        if self.epochs <= 0:
            raise ConfigError("epochs must be positive")
        # zero is permitted as a degenerate no-op (useful as a fixture)
        if self.learning_rate < 0.0:
            raise ConfigError("learning_rate must be non-negative")
        if self.weight_decay < 0.0:
            raise ConfigError("weight_decay must be non-negative")


class Adam:
    """Adam with weight decay folded into the gradient as an L2 term."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        learning_rate: float,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for name, value in params.items():
            g = grads[name] + self.weight_decay * value
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            value -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def train(model: GnnModel, data: Dataset, cfg: TrainConfig):
    """Train in place on the train mask; returns (model, per-epoch trace)."""
    if cfg.dropout is not None:
        model.dropout = cfg.dropout
    if not data.train_mask.any():
        raise ConfigError("training requires a non-empty train mask")
    ctx = build_graph_context(model.arch, data.graph)
    x = np.ascontiguousarray(data.features, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(model.params, cfg.learning_rate, cfg.weight_decay)
    has_val = bool(data.val_mask.any())

    trace = []
    for epoch in range(1, cfg.epochs + 1):
        with Tape() as tape:
            leaves = _leaf_params(tape, model)
            _, logits = _forward_graph(model, leaves, tape.leaf(x), ctx, True, rng)
            loss = ad.masked_cross_entropy(logits, data.labels, data.train_mask)
            loss_value = float(loss.value)
            if not np.isfinite(loss_value):
                raise NonFiniteLoss(
                    f"loss became {loss_value} at epoch {epoch} "
                    f"(arch={model.arch}, lr={cfg.learning_rate})"
                )
            tape.backward(loss)
            grads = {
                name: node.grad if node.grad is not None else np.zeros_like(node.value)
                for name, node in leaves.items()
            }
        optimizer.step(model.params, grads)
        trace.append(
            {
                "epoch": epoch,
                "loss": loss_value,
                "train_accuracy": evaluate(model, data, data.train_mask),
                "val_accuracy": (
                    evaluate(model, data, data.val_mask) if has_val else float("nan")
                ),
            }
        )
    return model, trace

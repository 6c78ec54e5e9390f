"""Minimal reverse-mode differentiation over dense/sparse numpy operations.

A ``Tape`` records every node created during one forward pass in creation
order, which is a valid topological order of the operator graph; ``backward``
walks it once in reverse. Node values cache the forward activations needed by
each backward rule. The operator set is exactly what the three GNN
architectures require; nothing here aims to be a general framework.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .sparse import SparseMatrix

__all__ = ["Tape", "Node", "active_tape"]

_ACTIVE: list["Tape"] = []


def active_tape() -> "Tape":
    if not _ACTIVE:
        raise RuntimeError("no active tape; wrap the forward pass in `with Tape():`")
    return _ACTIVE[-1]


class Node:
    """One recorded value in the operator graph."""

    __slots__ = ("value", "grad", "parents", "backward_rule")

    def __init__(self, value, parents=(), backward_rule=None):
        self.value = value
        self.grad = None
        self.parents = parents
        self.backward_rule = backward_rule

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, grad):
        if self.grad is None:
            self.grad = grad.copy() if isinstance(grad, np.ndarray) else grad
        else:
            self.grad = self.grad + grad

    # arithmetic sugar used by the model code
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Recorded operator graph for one forward pass."""

    def __init__(self):
        self.nodes: list[Node] = []

    def __enter__(self):
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.pop()
        return False

    def record(self, node: Node) -> Node:
        self.nodes.append(node)
        return node

    def leaf(self, value) -> Node:
        return self.record(Node(np.asarray(value, dtype=np.float64)))

    def backward(self, output: Node) -> None:
        """Propagate d(output)/d(node) into every node's ``grad``.

        Each recorded node is visited exactly once, in reverse creation
        order; creation order is topological because operands always exist
        before the operation that consumes them.
        """
        if output.value.ndim != 0:
            raise ShapeMismatch("backward root must be scalar")
        output.grad = np.asarray(1.0)
        for node in reversed(self.nodes):
            if node.grad is None or node.backward_rule is None:
                continue
            node.backward_rule(node.grad)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(a: Node, b: Node, value, da, db) -> Node:
    def rule(grad):
        a.accumulate(_unbroadcast(da(grad), a.value.shape))
        b.accumulate(_unbroadcast(db(grad), b.value.shape))

    return active_tape().record(Node(value, (a, b), rule))


def add(a: Node, b: Node) -> Node:
    return _binary(a, b, a.value + b.value, lambda g: g, lambda g: g)


def sub(a: Node, b: Node) -> Node:
    return _binary(a, b, a.value - b.value, lambda g: g, lambda g: -g)


def mul(a: Node, b: Node) -> Node:
    return _binary(
        a, b, a.value * b.value, lambda g: g * b.value, lambda g: g * a.value
    )


def div(a: Node, b: Node) -> Node:
    return _binary(
        a,
        b,
        a.value / b.value,
        lambda g: g / b.value,
        lambda g: -g * a.value / (b.value**2),
    )


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ShapeMismatch("matmul expects 2-D operands")

    def rule(grad):
        a.accumulate(grad @ b.value.T)
        b.accumulate(a.value.T @ grad)

    return active_tape().record(Node(a.value @ b.value, (a, b), rule))


def spmm(mat: SparseMatrix, x: Node) -> Node:
    """Constant sparse matrix times dense node."""
    csr = mat.to_scipy()
    csr_t = csr.T.tocsr()

    def rule(grad):
        x.accumulate(csr_t @ grad)

    return active_tape().record(Node(csr @ x.value, (x,), rule))


def gather_rows(x: Node, index: np.ndarray) -> Node:
    index = np.asarray(index, dtype=np.int64)

    def rule(grad):
        out = np.zeros_like(x.value)
        np.add.at(out, index, grad)
        x.accumulate(out)

    return active_tape().record(Node(x.value[index], (x,), rule))


def segment_sum(x: Node, segments: np.ndarray, num_segments: int) -> Node:
    segments = np.asarray(segments, dtype=np.int64)
    value = np.zeros((num_segments,) + x.value.shape[1:])
    np.add.at(value, segments, x.value)

    def rule(grad):
        x.accumulate(grad[segments])

    return active_tape().record(Node(value, (x,), rule))


def concat_cols(parts: list[Node]) -> Node:
    widths = [p.value.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def rule(grad):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            part.accumulate(grad[:, lo:hi])

    value = np.concatenate([p.value for p in parts], axis=1)
    return active_tape().record(Node(value, tuple(parts), rule))


def relu(x: Node) -> Node:
    mask = x.value > 0

    def rule(grad):
        x.accumulate(grad * mask)

    return active_tape().record(Node(x.value * mask, (x,), rule))


def leaky_relu(x: Node, alpha: float = 0.2) -> Node:
    slope = np.where(x.value > 0, 1.0, alpha)

    def rule(grad):
        x.accumulate(grad * slope)

    return active_tape().record(Node(x.value * slope, (x,), rule))


def elu(x: Node, alpha: float = 1.0) -> Node:
    pos = x.value > 0
    expm1 = alpha * np.expm1(np.minimum(x.value, 0.0))
    value = np.where(pos, x.value, expm1)

    def rule(grad):
        x.accumulate(grad * np.where(pos, 1.0, expm1 + alpha))

    return active_tape().record(Node(value, (x,), rule))


def exp(x: Node) -> Node:
    value = np.exp(x.value)

    def rule(grad):
        x.accumulate(grad * value)

    return active_tape().record(Node(value, (x,), rule))


def scale_const(x: Node, factor) -> Node:
    factor = np.asarray(factor, dtype=np.float64)

    def rule(grad):
        x.accumulate(_unbroadcast(grad * factor, x.value.shape))

    return active_tape().record(Node(x.value * factor, (x,), rule))


def batchnorm(
    x: Node,
    gamma: Node,
    beta: Node,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Node:
    """Feature-wise batch normalization over axis 0.

    Train mode normalizes with batch statistics, differentiates through them,
    and updates the running buffers in place (unbiased variance, matching the
    usual convention). Eval mode treats the running buffers as constants.
    """
    if training:
        count = x.value.shape[0]
        mean = x.value.mean(axis=0)
        var = x.value.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x.value - mean) * inv_std
        unbiased = var * count / max(count - 1, 1)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased

        def rule(grad):
            gamma.accumulate((grad * x_hat).sum(axis=0))
            beta.accumulate(grad.sum(axis=0))
            gm = grad.mean(axis=0)
            gxm = (grad * x_hat).mean(axis=0)
            x.accumulate(gamma.value * inv_std * (grad - gm - x_hat * gxm))

    else:
        inv_std = 1.0 / np.sqrt(running_var + eps)
        x_hat = (x.value - running_mean) * inv_std

        def rule(grad):
            gamma.accumulate((grad * x_hat).sum(axis=0))
            beta.accumulate(grad.sum(axis=0))
            x.accumulate(grad * (gamma.value * inv_std))

    value = gamma.value * x_hat + beta.value
    return active_tape().record(Node(value, (x, gamma, beta), rule))


def masked_cross_entropy(logits: Node, labels: np.ndarray, mask: np.ndarray) -> Node:
    """Mean cross-entropy of ``logits`` rows selected by ``mask``.

    Fused log-softmax + negative log-likelihood; the backward rule is the
    usual (softmax - onehot) / count on the masked rows.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rows = np.nonzero(np.asarray(mask, dtype=bool))[0]
    if rows.size == 0:
        raise ShapeMismatch("cross entropy over an empty mask")
    z = logits.value[rows]
    z_max = z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z - z_max).sum(axis=1, keepdims=True)) + z_max
    log_prob = z - log_norm
    picked = log_prob[np.arange(rows.size), labels[rows]]
    value = np.asarray(-picked.mean())

    def rule(grad):
        soft = np.exp(log_prob)
        soft[np.arange(rows.size), labels[rows]] -= 1.0
        out = np.zeros_like(logits.value)
        out[rows] = soft * (float(grad) / rows.size)
        logits.accumulate(out)

    return active_tape().record(Node(value, (logits,), rule))

"""Dense-layer primitives with exact analytic gradients.

Everything operates on float64 numpy arrays in row-major layout, one
sample per row. Forward functions return plain arrays; each backward
function takes the upstream gradient and returns gradients shaped like
its inputs, so a finite-difference check can be run against any of them
in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError


def as_matrix(x) -> np.ndarray:
    """Coerce to a 2-D float64 array, copying only when needed."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {np.shape(x)}")
    return a


@dataclass
class AffineParams:
    """One dense layer: weights (in_dim, out_dim) and bias (out_dim,)."""

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {self.w.shape}")
        if self.b.ndim != 1 or self.b.shape[0] != self.w.shape[1]:
            raise ShapeError(
                f"bias shape {self.b.shape} does not match weights {self.w.shape}")

    @property
    def in_dim(self) -> int:
        return self.w.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w.shape[1]


def affine_forward(x: np.ndarray, params: AffineParams) -> np.ndarray:
    """Compute x @ W + b."""
    x = as_matrix(x)
    if x.shape[1] != params.in_dim:
        raise ShapeError(
            f"affine input has {x.shape[1]} columns but weights expect "
            f"{params.in_dim} (input {x.shape} vs weights {params.w.shape})")
    return x @ params.w + params.b


def affine_backward(x: np.ndarray, params: AffineParams, upstream: np.ndarray):
    """Gradients of an affine layer.

    Args:
        x: forward input, shape (n, in_dim).
        params: the layer parameters used in the forward pass.
        upstream: gradient of the loss w.r.t. the layer output, (n, out_dim).

    Returns:
        (d_x, d_w, d_b) with the shapes of x, params.w and params.b.
    """
    x = as_matrix(x)
    upstream = as_matrix(upstream)
    if upstream.shape != (x.shape[0], params.out_dim):
        raise ShapeError(
            f"upstream shape {upstream.shape} does not match output shape "
            f"({x.shape[0]}, {params.out_dim})")
    d_x = upstream @ params.w.T
    d_w = x.T @ upstream
    d_b = upstream.sum(axis=0)
    return d_x, d_w, d_b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(as_matrix(x), 0.0)


def relu_backward(x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Subgradient at exactly zero is taken as zero."""
    x = as_matrix(x)
    upstream = as_matrix(upstream)
    if upstream.shape != x.shape:
        raise ShapeError(f"upstream shape {upstream.shape} != input shape {x.shape}")
    return np.where(x > 0.0, upstream, 0.0)


@dataclass
class DropoutState:
    """Dropout configuration plus the mask recorded by the last forward."""

    rate: float
    mode: str = "train"
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ParameterError(f"dropout rate must be in [0, 1), got {self.rate}")
        if self.mode not in ("train", "eval"):
            raise ParameterError(f"dropout mode must be 'train' or 'eval', got {self.mode!r}")


def dropout_forward(x: np.ndarray, state: DropoutState,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Inverted dropout: kept units are scaled by 1/(1-rate) at train time.

    Eval mode is the identity, so no rescaling is ever needed at test time.
    The keep mask is stored on `state` for the backward pass.
    """
    x = as_matrix(x)
    if state.mode == "eval":
        state.mask = None
        return x
    if rng is None:
        raise ParameterError("train-mode dropout needs an rng stream")
    keep = rng.random(x.shape) >= state.rate
    state.mask = keep
    return x * keep / (1.0 - state.rate)


def dropout_backward(upstream: np.ndarray, state: DropoutState) -> np.ndarray:
    upstream = as_matrix(upstream)
    if state.mode == "eval" or state.mask is None:
        return upstream
    if state.mask.shape != upstream.shape:
        raise ShapeError(
            f"upstream shape {upstream.shape} != mask shape {state.mask.shape}")
    return upstream * state.mask / (1.0 - state.rate)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilised by subtracting the row maximum."""
    logits = as_matrix(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_labels(labels, n_rows: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n_rows:
        raise ShapeError(
            f"labels shape {labels.shape} does not match {n_rows} logit rows")
    if not np.issubdtype(labels.dtype, np.integer):
        if np.any(labels != labels.astype(np.int64)):
            raise ParameterError("labels must be integers")
        labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ParameterError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]")
    return labels.astype(np.int64)


def softmax_cross_entropy(logits: np.ndarray, labels):
    """Mean cross-entropy of softmax(logits) against integer labels.

    Returns:
        (loss, grad) where grad is d loss / d logits, shape (n, classes).
        grad is (softmax - onehot) / n, exact for the mean reduction.
    """
    logits = as_matrix(logits)
    n, c = logits.shape
    if c < 2:
        raise ShapeError(f"need at least 2 classes, got {c}")
    if n == 0:
        raise ShapeError("cannot take cross-entropy of an empty batch")
    labels = _check_labels(labels, n, c)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = -float(log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad

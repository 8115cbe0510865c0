"""Domain discrepancy measures between two feature batches.

Both measures return their value together with analytic gradients with
respect to both batches, so they can sit directly in a training loop:

* ``mmd_loss``: squared distance between kernel mean embeddings,
  estimated with the biased V-statistic (diagonal terms included),
      MMD^2 = mean(Kxx) + mean(Kyy) - 2 mean(Kxy),
  which is non-negative by construction. The gaussian kernel is
      k(a, b) = exp(-||a - b||^2 / (2 sigma^2)),
  with sigma taken from the median heuristic when no bandwidth is given.
  The bandwidth is treated as a constant by the gradient even when it
  was derived from the batch.

* ``coral_loss``: squared Frobenius distance between the two batch
  covariance matrices, scaled by 1/(4 d^2). The covariance is computed
  in Gram form,
      C = (D^T D - s^T s / n) / (n - 1),   s = column sums of D,
  which matches the two-pass centered estimate up to rounding.

Module-level call counters make it cheap to assert that a code path
never touched these losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InsufficientSamplesError, ParameterError, ShapeError
from .nn import as_matrix

CALL_COUNTS = {"mmd_loss": 0, "coral_loss": 0}


def reset_call_counts() -> None:
    for key in CALL_COUNTS:
        CALL_COUNTS[key] = 0


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice for the mean-embedding distance.

    kind: 'gaussian' (rbf) or 'linear'. bandwidth: sigma for the gaussian
    kernel, or None to use the median heuristic on each batch pair.
    """

    kind: str = "gaussian"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise ParameterError(f"kernel kind must be 'gaussian' or 'linear', got {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0.0:
            raise ParameterError(f"kernel bandwidth must be positive, got {self.bandwidth}")


def _check_pair(src, tgt, min_rows: int):
    src = as_matrix(src)
    tgt = as_matrix(tgt)
    if src.shape[1] != tgt.shape[1]:
        raise ShapeError(
            f"feature dimensions differ: source {src.shape} vs target {tgt.shape}")
    for name, batch in (("source", src), ("target", tgt)):
        if batch.shape[0] < min_rows:
            raise InsufficientSamplesError(
                f"{name} batch needs at least {min_rows} rows, got {batch.shape[0]}")
    return src, tgt


def median_bandwidth(src, tgt) -> float:
    """Median-heuristic sigma over the pooled batches.

    sigma^2 is the median of the pairwise squared distances between all
    pooled rows, self-distances excluded. Falls back to 1.0 whenever
    that median is zero (degenerate, mostly-duplicate batches).
    """
    src, tgt = _check_pair(src, tgt, min_rows=1)
    pooled = np.vstack([src, tgt])
    if pooled.shape[0] < 2:
        raise InsufficientSamplesError("median heuristic needs at least 2 pooled rows")
    sq = cdist(pooled, pooled, "sqeuclidean")
    upper = sq[np.triu_indices(pooled.shape[0], k=1)]
    med = float(np.median(upper))
    if med <= 0.0:
        return 1.0
    return float(np.sqrt(med))


def mmd_loss(src, tgt, kernel: KernelSpec = KernelSpec()):
    """Biased squared MMD between two batches, with gradients.

    Args:
        src: (n, d) source batch.
        tgt: (m, d) target batch; m may differ from n.
        kernel: kernel family and bandwidth.

    Returns:
        (loss, grad_src, grad_tgt).
    """
    CALL_COUNTS["mmd_loss"] += 1
    src, tgt = _check_pair(src, tgt, min_rows=1)
    n, m = src.shape[0], tgt.shape[0]

    if kernel.kind == "linear":
        diff = src.mean(axis=0) - tgt.mean(axis=0)
        loss = float(diff @ diff)
        grad_src = np.tile(2.0 * diff / n, (n, 1))
        grad_tgt = np.tile(-2.0 * diff / m, (m, 1))
        return loss, grad_src, grad_tgt

    sigma = kernel.bandwidth if kernel.bandwidth is not None else median_bandwidth(src, tgt)
    inv = 1.0 / (2.0 * sigma * sigma)
    k_xx = np.exp(-cdist(src, src, "sqeuclidean") * inv)
    k_yy = np.exp(-cdist(tgt, tgt, "sqeuclidean") * inv)
    k_xy = np.exp(-cdist(src, tgt, "sqeuclidean") * inv)
    t_xx = float(k_xx.mean())
    t_yy = float(k_yy.mean())
    t_xy = float(k_xy.mean())
    loss = max(t_xx + t_yy - 2.0 * t_xy, 0.0)

    # d/da k(a,b) = -k(a,b) (a-b)/sigma^2; sum K[i,j](x_i - x_j) folds into
    # rowsum-weighted rows minus one matmul.
    s2 = sigma * sigma
    row_xx = k_xx.sum(axis=1, keepdims=True)
    row_yy = k_yy.sum(axis=1, keepdims=True)
    row_xy = k_xy.sum(axis=1, keepdims=True)
    col_xy = k_xy.sum(axis=0, keepdims=True).T
    grad_src = (-2.0 / (n * n * s2)) * (row_xx * src - k_xx @ src) \
        + (2.0 / (n * m * s2)) * (row_xy * src - k_xy @ tgt)
    grad_tgt = (-2.0 / (m * m * s2)) * (row_yy * tgt - k_yy @ tgt) \
        + (2.0 / (n * m * s2)) * (col_xy * tgt - k_xy.T @ src)
    return loss, grad_src, grad_tgt


def covariance(batch) -> np.ndarray:
    """Sample covariance of a batch in Gram form (n-1 denominator)."""
    batch = as_matrix(batch)
    n = batch.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs at least 2 rows, got {n}")
    col_sums = batch.sum(axis=0, keepdims=True)
    return (batch.T @ batch - col_sums.T @ col_sums / n) / (n - 1)


@dataclass(frozen=True)
class CoralTerms:
    """Intermediate quantities of the covariance-alignment loss."""

    c_src: np.ndarray
    c_tgt: np.ndarray
    dim: int
    n_src: int
    n_tgt: int


def coral_terms(src, tgt) -> CoralTerms:
    src, tgt = _check_pair(src, tgt, min_rows=2)
    return CoralTerms(
        c_src=covariance(src),
        c_tgt=covariance(tgt),
        dim=src.shape[1],
        n_src=src.shape[0],
        n_tgt=tgt.shape[0],
    )


def coral_loss(src, tgt):
    """Covariance alignment loss ||C_src - C_tgt||_F^2 / (4 d^2), with gradients.

    Gradient w.r.t. the source batch: with G = (C_src - C_tgt) / (2 d^2),
        d loss / d src = 2/(n-1) * (src - colmean(src)) @ G,
    and the target gets the mirrored term with opposite sign.
    """
    CALL_COUNTS["coral_loss"] += 1
    src, tgt = _check_pair(src, tgt, min_rows=2)
    d = src.shape[1]
    n, m = src.shape[0], tgt.shape[0]
    delta = covariance(src) - covariance(tgt)
    loss = float((delta * delta).sum()) / (4.0 * d * d)
    g = delta / (2.0 * d * d)
    grad_src = (2.0 / (n - 1)) * (src - src.mean(axis=0)) @ g
    grad_tgt = (-2.0 / (m - 1)) * (tgt - tgt.mean(axis=0)) @ g
    return loss, grad_src, grad_tgt

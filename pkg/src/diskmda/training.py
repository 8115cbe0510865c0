"""Joint training of the classifier and the adaptation penalties.

Every step draws one labeled batch from the training domain and, for
adaptive variants, an equally sized unlabeled batch from the target.
Both batches run through the network in train mode, the variant's loss
terms are combined with frozen weights, and the weighted gradients are
backpropagated in a single pass per domain: the classification gradient
enters at the logits of the labeled batch, the discrepancy gradients
enter at the taps of both batches.

All randomness (batch order, dropout masks, discrepancy subsampling)
derives from TrainConfig.seed. The source-batch and target-batch streams
are seeded identically, so when the two domains hold the same rows the
drawn batches coincide, every discrepancy term is exactly zero, and an
adaptive run reproduces the source-only run parameter for parameter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import da
from .da import KernelSpec
from .errors import DataError, DivergenceError, ParameterError
from .network import MdaNetwork, backward, forward
from .nn import softmax_cross_entropy
from .pipeline import DomainDataset
from .util import make_rng, subseed
from .weighting import (
    LossBreakdown,
    total_loss,
    validate_variant,
    variant_layers,
    variant_uses_coral,
    variant_uses_mmd,
)


@dataclass(frozen=True)
class TrainConfig:
    variant: str
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    weighting: str = "dynamic"
    gamma: float = 10.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    discrepancy_cap: int = 2048

    def __post_init__(self):
        validate_variant(self.variant)
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ParameterError(f"batch_size must be >= 2, got {self.batch_size}")
        if not self.learning_rate > 0.0:
            raise ParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise ParameterError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.weighting not in ("dynamic", "gamma"):
            raise ParameterError(f"weighting must be 'dynamic' or 'gamma', got {self.weighting!r}")
        if self.discrepancy_cap < 2:
            raise ParameterError(f"discrepancy_cap must be >= 2, got {self.discrepancy_cap}")


class Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            p -= self.learning_rate * grads[name]


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return Sgd(cfg.learning_rate)
    return Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)


@dataclass(frozen=True)
class DiscrepancyRecord:
    """Full-pass MMD and CORAL at both taps, layer 1 first."""

    mmd: tuple[float, float]
    coral: tuple[float, float]


@dataclass
class TrainHistory:
    steps: list[LossBreakdown] = field(default_factory=list)
    epochs: list[LossBreakdown] = field(default_factory=list)
    discrepancy: list[DiscrepancyRecord] = field(default_factory=list)


def compute_step(net: MdaNetwork, src_batch, src_labels, tgt_batch,
                 variant: str, kernel: KernelSpec = KernelSpec(),
                 weighting: str = "dynamic", gamma: float = 10.0,
                 mode: str = "train", src_rng=None, tgt_rng=None):
    """Losses and parameter gradients for one step.

    The weights inside the returned LossBreakdown are the frozen values
    actually applied to the gradients. ``tgt_batch`` is ignored by the
    two baseline variants. Returns (breakdown, grads).
    """
    layers = variant_layers(variant)
    trace_src = forward(net, src_batch, mode=mode, rng=src_rng)
    l_class, grad_logits = softmax_cross_entropy(trace_src.logits, src_labels)

    l_mmd, l_coral = [], []
    mmd_grads, coral_grads = [], []
    trace_tgt = None
    if layers:
        if tgt_batch is None or len(tgt_batch) == 0:
            raise DataError(f"variant {variant!r} needs target batches, got none")
        trace_tgt = forward(net, tgt_batch, mode=mode, rng=tgt_rng)
        for layer in layers:
            feats_src = trace_src.layer1_feats if layer == 1 else trace_src.layer2_feats
            feats_tgt = trace_tgt.layer1_feats if layer == 1 else trace_tgt.layer2_feats
            if variant_uses_mmd(variant):
                value, g_src, g_tgt = da.mmd_loss(feats_src, feats_tgt, kernel)
                l_mmd.append(value)
                mmd_grads.append((g_src, g_tgt))
            if variant_uses_coral(variant):
                value, g_src, g_tgt = da.coral_loss(feats_src, feats_tgt)
                l_coral.append(value)
                coral_grads.append((g_src, g_tgt))

    breakdown = total_loss(variant, l_class, l_mmd, l_coral,
                           weighting=weighting, gamma=gamma)

    tap_src = {1: None, 2: None}
    tap_tgt = {1: None, 2: None}
    for pos, layer in enumerate(layers):
        g_src = np.zeros_like(trace_src.layer1_feats if layer == 1 else trace_src.layer2_feats)
        g_tgt = np.zeros_like(trace_tgt.layer1_feats if layer == 1 else trace_tgt.layer2_feats)
        if variant_uses_mmd(variant):
            g_src += breakdown.x[pos] * mmd_grads[pos][0]
            g_tgt += breakdown.x[pos] * mmd_grads[pos][1]
        if variant_uses_coral(variant):
            g_src += breakdown.y[pos] * coral_grads[pos][0]
            g_tgt += breakdown.y[pos] * coral_grads[pos][1]
        tap_src[layer] = g_src
        tap_tgt[layer] = g_tgt

    grads = backward(net, trace_src, grad_logits=breakdown.n * grad_logits,
                     grad_layer2=tap_src[2], grad_layer1=tap_src[1])
    if trace_tgt is not None:
        tgt_grads = backward(net, trace_tgt, grad_logits=None,
                             grad_layer2=tap_tgt[2], grad_layer1=tap_tgt[1])
        for name in grads:
            grads[name] += tgt_grads[name]
    return breakdown, grads


def epoch_discrepancy(net: MdaNetwork, src_feats, tgt_feats,
                      kernel: KernelSpec = KernelSpec(), cap: int = 2048,
                      rng: np.random.Generator | None = None) -> DiscrepancyRecord:
    """Eval-mode MMD and CORAL between two feature sets at both taps.

    Each set is subsampled to at most ``cap`` rows (deterministically,
    from the supplied rng) so the epoch metric stays affordable on large
    domains.
    """
    src_feats = np.asarray(src_feats, dtype=np.float64)
    tgt_feats = np.asarray(tgt_feats, dtype=np.float64)
    if rng is None:
        rng = make_rng(0)
    if len(src_feats) > cap:
        src_feats = src_feats[np.sort(rng.choice(len(src_feats), cap, replace=False))]
    if len(tgt_feats) > cap:
        tgt_feats = tgt_feats[np.sort(rng.choice(len(tgt_feats), cap, replace=False))]
    trace_src = forward(net, src_feats, mode="eval")
    trace_tgt = forward(net, tgt_feats, mode="eval")
    mmd_vals = []
    coral_vals = []
    for feats_src, feats_tgt in (
            (trace_src.layer1_feats, trace_tgt.layer1_feats),
            (trace_src.layer2_feats, trace_tgt.layer2_feats)):
        mmd_vals.append(da.mmd_loss(feats_src, feats_tgt, kernel)[0])
        coral_vals.append(da.coral_loss(feats_src, feats_tgt)[0])
    return DiscrepancyRecord(mmd=tuple(mmd_vals), coral=tuple(coral_vals))


def _epoch_plan(gen: np.random.Generator, n_rows: int, steps: int,
                batch_size: int) -> np.ndarray:
    """Batch indices for one epoch, shape (steps, batch_size).

    Domains large enough for the epoch are shuffled and chunked without
    replacement; smaller domains are resampled with replacement.
    """
    if n_rows >= steps * batch_size:
        order = gen.permutation(n_rows)
        return order[:steps * batch_size].reshape(steps, batch_size)
    return gen.integers(0, n_rows, size=(steps, batch_size))


def _mean_breakdown(rows: list[LossBreakdown]) -> LossBreakdown:
    def mean(values):
        return float(np.mean(values))

    t_mmd = len(rows[0].l_mmd)
    t_coral = len(rows[0].l_coral)
    return LossBreakdown(
        l_class=mean([r.l_class for r in rows]),
        l_mmd=tuple(mean([r.l_mmd[i] for r in rows]) for i in range(t_mmd)),
        l_coral=tuple(mean([r.l_coral[i] for r in rows]) for i in range(t_coral)),
        n=mean([r.n for r in rows]),
        x=tuple(mean([r.x[i] for r in rows]) for i in range(t_mmd)),
        y=tuple(mean([r.y[i] for r in rows]) for i in range(t_coral)),
        total=mean([r.total for r in rows]),
        gamma=rows[0].gamma,
    )


def train(source: DomainDataset | None, target: DomainDataset | None,
          net: MdaNetwork, cfg: TrainConfig):
    """Train the network in place. Returns (net, TrainHistory).

    target_only trains on the target's labeled training split and ignores
    the source entirely; source_only trains on the source alone. Adaptive
    variants additionally stream unlabeled target training rows into the
    discrepancy terms. The per-epoch discrepancy record is kept for
    adaptive variants only, so the baselines never touch the discrepancy
    code at all.
    """
    layers = variant_layers(cfg.variant)
    adaptive = bool(layers)

    labeled = target if cfg.variant == "target_only" else source
    if labeled is None:
        raise DataError(f"variant {cfg.variant!r} has no training domain")
    train_idx = labeled.rows(split="train")
    if len(train_idx) == 0:
        raise DataError(f"training split of {labeled.model!r} is empty")
    x_labeled = labeled.features[train_idx]
    y_labeled = labeled.labels[train_idx]

    x_target = None
    if adaptive:
        if target is None:
            raise DataError(f"variant {cfg.variant!r} needs a target domain")
        tgt_idx = target.rows(split="train")
        if len(tgt_idx) == 0:
            raise DataError(f"variant {cfg.variant!r} needs target rows, got none")
        x_target = target.features[tgt_idx]

    batch_seed = subseed(cfg.seed, "batches")
    dropout_seed = subseed(cfg.seed, "dropout")
    gen_batch_src = make_rng(batch_seed)
    gen_batch_tgt = make_rng(batch_seed)
    gen_drop_src = make_rng(dropout_seed)
    gen_drop_tgt = make_rng(dropout_seed)
    subsample_seed = subseed(cfg.seed, "discrepancy")

    optimizer = make_optimizer(cfg)
    history = TrainHistory()
    steps_per_epoch = max(1, len(x_labeled) // cfg.batch_size)
    params = net.params()
    global_step = 0

    for _ in range(cfg.epochs):
        plan_src = _epoch_plan(gen_batch_src, len(x_labeled), steps_per_epoch, cfg.batch_size)
        plan_tgt = None
        if adaptive:
            plan_tgt = _epoch_plan(gen_batch_tgt, len(x_target), steps_per_epoch, cfg.batch_size)
        epoch_rows = []
        for step in range(steps_per_epoch):
            xb = x_labeled[plan_src[step]]
            yb = y_labeled[plan_src[step]]
            tb = x_target[plan_tgt[step]] if adaptive else None
            breakdown, grads = compute_step(
                net, xb, yb, tb, cfg.variant, kernel=cfg.kernel,
                weighting=cfg.weighting, gamma=cfg.gamma, mode="train",
                src_rng=gen_drop_src, tgt_rng=gen_drop_tgt)
            if not np.isfinite(breakdown.total):
                raise DivergenceError(f"non-finite total loss at step {global_step}")
            optimizer.step(params, grads)
            history.steps.append(breakdown)
            epoch_rows.append(breakdown)
            global_step += 1
        history.epochs.append(_mean_breakdown(epoch_rows))
        if adaptive:
            history.discrepancy.append(epoch_discrepancy(
                net, x_labeled, x_target, kernel=cfg.kernel,
                cap=cfg.discrepancy_cap, rng=make_rng(subsample_seed)))
    return net, history


def history_columns(breakdown: LossBreakdown) -> list[str]:
    columns = ["step", "l_class"]
    columns += [f"l_mmd_{i + 1}" for i in range(len(breakdown.l_mmd))]
    columns += [f"l_coral_{i + 1}" for i in range(len(breakdown.l_coral))]
    columns += ["n"]
    columns += [f"x_{i + 1}" for i in range(len(breakdown.x))]
    columns += [f"y_{i + 1}" for i in range(len(breakdown.y))]
    columns += ["total"]
    return columns


def write_history_csv(history: TrainHistory, path,
                      manifest_name: str = "manifest.json") -> None:
    """One row per training step: every loss term, weight, and the total."""
    if not history.steps:
        raise ParameterError("history has no steps to write")
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest_name}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(history_columns(history.steps[0]))
        for step, row in enumerate(history.steps):
            writer.writerow(
                [step, repr(row.l_class)]
                + [repr(v) for v in row.l_mmd]
                + [repr(v) for v in row.l_coral]
                + [repr(row.n)]
                + [repr(v) for v in row.x]
                + [repr(v) for v in row.y]
                + [repr(row.total)])

"""Evaluation metric and the cross-domain experiment matrix.

Failure is the positive class (label 1). The benchmark score is the
geometric mean of sensitivity and specificity,
    G = sqrt( TP/(TP+FN) * TN/(TN+FP) ),
with a factor of zero substituted when its denominator is empty, so a
classifier that ignores either class scores 0 regardless of imbalance.

``run_matrix`` trains and scores every (source, target, variant, seed)
cell of an ExperimentSpec on the targets' test splits and returns a
report whose rows are sorted by (target, source, variant, seed).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, ParameterError
from .network import MdaNetwork, NetworkConfig, init_network, predict
from .pipeline import DomainDataset, NormalizationStats, normalize, normalize_pair
from .training import TrainConfig, TrainHistory, train
from .util import make_rng, subseed
from .weighting import VARIANTS, validate_variant


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def confusion(predictions, labels) -> ConfusionMatrix:
    """Count binary outcomes; class 1 (failure) is the positive class."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ParameterError(
            f"predictions {predictions.shape} and labels {labels.shape} must be "
            f"equal-length vectors")
    for name, arr in (("predictions", predictions), ("labels", labels)):
        if arr.size and not set(np.unique(arr)) <= {0, 1}:
            raise ParameterError(f"{name} must contain only 0 and 1")
    return ConfusionMatrix(
        tp=int(np.sum((predictions == 1) & (labels == 1))),
        fn=int(np.sum((predictions == 0) & (labels == 1))),
        fp=int(np.sum((predictions == 1) & (labels == 0))),
        tn=int(np.sum((predictions == 0) & (labels == 0))),
    )


def g_mean(cm: ConfusionMatrix) -> float:
    sensitivity = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else 0.0
    specificity = cm.tn / (cm.tn + cm.fp) if (cm.tn + cm.fp) > 0 else 0.0
    return math.sqrt(sensitivity * specificity)


@dataclass(frozen=True)
class ExperimentSpec:
    """The benchmark grid: domains, variants, replicate seeds, settings."""

    sources: tuple[str, ...]
    targets: tuple[str, ...]
    variants: tuple[str, ...]
    seeds: tuple[int, ...]
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(variant="source_only"))
    normalization: str = "shared"

    def __post_init__(self):
        for name in ("sources", "targets", "variants", "seeds"):
            values = tuple(getattr(self, name))
            if not values:
                raise ParameterError(f"{name} must be non-empty")
            object.__setattr__(self, name, values)
        for variant in self.variants:
            validate_variant(variant)
        if self.normalization not in ("shared", "per_domain"):
            raise ParameterError(
                f"normalization must be 'shared' or 'per_domain', got {self.normalization!r}")

    def cells(self):
        """All (source, target, variant, seed) cells; same-domain pairs are skipped."""
        for target in self.targets:
            for source in self.sources:
                if source == target:
                    continue
                for variant in self.variants:
                    for seed in self.seeds:
                        yield source, target, variant, seed


@dataclass(frozen=True)
class ReportRow:
    source: str
    target: str
    variant: str
    seed: int
    g_mean: float
    tp: int
    fn: int
    fp: int
    tn: int
    wall_ms: float


@dataclass(frozen=True)
class CellError:
    source: str
    target: str
    variant: str
    seed: int
    message: str


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    errors: list[CellError] = field(default_factory=list)

    def row_targets(self) -> list[str]:
        return sorted({row.target for row in self.rows})

    def row_sources(self, target: str) -> list[str]:
        return sorted({row.source for row in self.rows if row.target == target})

    def row_variants(self) -> list[str]:
        present = {row.variant for row in self.rows}
        return [v for v in VARIANTS if v in present]

    def cell_rows(self, source: str, target: str, variant: str) -> list[ReportRow]:
        picked = [row for row in self.rows
                  if row.source == source and row.target == target and row.variant == variant]
        return sorted(picked, key=lambda row: row.seed)

    def mean_g(self, source: str, target: str, variant: str) -> float:
        rows = self.cell_rows(source, target, variant)
        if not rows:
            raise ParameterError(f"no rows for ({source}, {target}, {variant})")
        return float(np.mean([row.g_mean for row in rows]))


def run_single(source: DomainDataset | None, target: DomainDataset, variant: str,
               seed: int, net_cfg: NetworkConfig, train_cfg: TrainConfig,
               normalization: str = "shared"):
    """Train one cell and score it on the target test split.

    Returns (net, history, stats, cm, g) where stats is the normalization
    applied to target features (embedded in checkpoints so evaluation can
    reproduce the input map).
    """
    validate_variant(variant)
    if variant == "target_only":
        stats = NormalizationStats.from_features(
            target.features[target.rows(split="train")])
        tgt_norm = replace(target, features=normalize(target.features, stats))
        src_norm = None
    else:
        if source is None:
            raise DataError(f"variant {variant!r} needs a source dataset")
        src_norm, tgt_norm, stats = normalize_pair(source, target, mode=normalization)

    cfg = replace(train_cfg, variant=variant, seed=seed)
    net = init_network(net_cfg, make_rng(subseed(seed, "init")))
    net, history = train(src_norm, tgt_norm, net, cfg)

    test_idx = tgt_norm.rows(split="test")
    if len(test_idx) == 0:
        raise DataError(f"target {target.model!r} has no test rows")
    _, predicted = predict(net, tgt_norm.features[test_idx])
    cm = confusion(predicted, tgt_norm.labels[test_idx])
    return net, history, stats, cm, g_mean(cm)


def run_matrix(spec: ExperimentSpec, datasets: dict[str, DomainDataset]) -> ExperimentReport:
    """Run the full grid. Missing datasets fail before any training starts.

    Per-cell failures are collected into report.errors; completed cells
    still produce rows, so a partial report is always available.
    """
    needed = sorted(set(spec.sources) | set(spec.targets))
    missing = [model for model in needed if model not in datasets]
    if missing:
        raise DataError(f"datasets missing for models: {', '.join(missing)}")

    report = ExperimentReport()
    for source, target, variant, seed in spec.cells():
        started = time.perf_counter()
        try:
            _, _, _, cm, g = run_single(
                datasets[source], datasets[target], variant, seed,
                spec.network, spec.train, spec.normalization)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            report.errors.append(CellError(
                source=source, target=target, variant=variant, seed=seed,
                message=f"{type(exc).__name__}: {exc}"))
            continue
        wall_ms = (time.perf_counter() - started) * 1000.0
        report.rows.append(ReportRow(
            source=source, target=target, variant=variant, seed=seed,
            g_mean=g, tp=cm.tp, fn=cm.fn, fp=cm.fp, tn=cm.tn, wall_ms=wall_ms))
    report.rows.sort(key=lambda row: (row.target, row.source, row.variant, row.seed))
    report.errors.sort(key=lambda err: (err.target, err.source, err.variant, err.seed))
    return report

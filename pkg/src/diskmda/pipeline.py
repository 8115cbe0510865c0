"""Backblaze SMART data: ingestion, example construction, normalization.

Daily drive-stats CSVs are reduced to eleven SMART attributes (the
normalized values of 1, 3, 5, 7, 9, 187, 189, 194 and 197 plus the raw
counters of 5 and 197, in that order). Failure examples are the records
a disk reports in its final lookback window; healthy examples are drawn
from disks that never failed, ten per failure by default.

Feature scaling maps each attribute to [-1, 1],
    x' = 2 (x - x_min) / (x_max - x_min) - 1,
with min/max taken from a training split only; values outside the fitted
range are clipped and constant attributes map to 0. Dataset files keep
the raw attribute values alongside a stats sidecar so any pair of
domains can still be normalized with the source domain's statistics at
training time.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, ParameterError, SchemaError, ShapeError
from .util import file_sha256

FEATURE_COLUMNS = (
    "smart_1_normalized",
    "smart_3_normalized",
    "smart_5_normalized",
    "smart_5_raw",
    "smart_7_normalized",
    "smart_9_normalized",
    "smart_187_normalized",
    "smart_189_normalized",
    "smart_194_normalized",
    "smart_197_normalized",
    "smart_197_raw",
)

META_COLUMNS = ("date", "serial_number", "model", "failure")

DATASET_VERSION = 1


@dataclass(frozen=True)
class SmartRecord:
    """One disk-day: identity fields plus the eleven selected attributes."""

    date: str
    serial_number: str
    model: str
    failure: int
    values: np.ndarray


@dataclass
class IngestResult:
    records: list[SmartRecord]
    dropped_rows: int
    file_hashes: dict[str, str]


def ingest(csv_paths, model_filter=None) -> IngestResult:
    """Read daily CSVs into records, dropping rows with missing attributes.

    Args:
        csv_paths: iterable of daily drive-stats CSV paths.
        model_filter: optional collection of model ids to keep.

    Returns:
        IngestResult with records sorted by (date, serial_number), the
        count of rows dropped for missing selected values, and a sha256
        per input file for provenance.

    Raises:
        SchemaError: a file lacks one of the required columns.
    """
    keep = set(model_filter) if model_filter is not None else None
    wanted = list(META_COLUMNS) + list(FEATURE_COLUMNS)
    frames = []
    dropped = 0
    hashes: dict[str, str] = {}
    for path in sorted(str(p) for p in csv_paths):
        header = pd.read_csv(path, nrows=0)
        for column in wanted:
            if column not in header.columns:
                raise SchemaError(f"{path}: missing column '{column}'")
        frame = pd.read_csv(path, usecols=wanted)
        if keep is not None:
            frame = frame[frame["model"].isin(keep)]
        before = len(frame)
        frame = frame.dropna(subset=list(FEATURE_COLUMNS))
        dropped += before - len(frame)
        frames.append(frame)
        hashes[path] = file_sha256(path)

    if frames:
        merged = pd.concat(frames, ignore_index=True)
    else:
        merged = pd.DataFrame(columns=wanted)
    merged = merged.sort_values(["date", "serial_number"], kind="mergesort")

    values = merged[list(FEATURE_COLUMNS)].to_numpy(dtype=np.float64)
    records = [
        SmartRecord(
            date=str(row.date),
            serial_number=str(row.serial_number),
            model=str(row.model),
            failure=int(row.failure),
            values=values[i],
        )
        for i, row in enumerate(merged.itertuples(index=False))
    ]
    return IngestResult(records=records, dropped_rows=dropped, file_hashes=hashes)


@dataclass
class DomainDataset:
    """Labeled sample set for one disk model.

    features holds one row per example in FEATURE_COLUMNS order (raw or
    normalized depending on provenance); labels are 1 for failure rows;
    split tags each row 'train' or 'test'.
    """

    model: str
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.split = np.asarray(self.split, dtype=object)
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (n,) or self.split.shape != (n,):
            raise ShapeError(
                f"labels {self.labels.shape} / split {self.split.shape} do not "
                f"match {n} feature rows")
        if n and not set(np.unique(self.labels)) <= {0, 1}:
            raise ParameterError("labels must be 0 or 1")
        if not np.all(np.isfinite(self.features)):
            raise DataError("non-finite feature values")

    def rows(self, split: str | None = None, label: int | None = None) -> np.ndarray:
        mask = np.ones(len(self.labels), dtype=bool)
        if split is not None:
            mask &= self.split == split
        if label is not None:
            mask &= self.labels == label
        return np.flatnonzero(mask)


def build_domain(records, model_id: str, ratio: int = 10, lookback_days: int = 1,
                 rng: np.random.Generator | None = None,
                 provenance: dict | None = None) -> DomainDataset:
    """Assemble one model's examples from ingested records.

    Failure rows are each failed disk's records from its final
    ``lookback_days`` days (the failure day itself with the default of 1).
    Healthy rows are sampled uniformly without replacement from disks of
    the model that never failed, ``ratio`` per failure row; if the pool
    is too small, everything available is used and a warning is issued.
    """
    if ratio < 1:
        raise ParameterError(f"ratio must be >= 1, got {ratio}")
    if lookback_days < 1:
        raise ParameterError(f"lookback_days must be >= 1, got {lookback_days}")
    if rng is None:
        raise ParameterError("build_domain needs an rng for negative sampling")

    by_serial: dict[str, list[SmartRecord]] = {}
    for record in records:
        if record.model == model_id:
            by_serial.setdefault(record.serial_number, []).append(record)
    if not by_serial:
        raise DataError(f"no records for model {model_id!r}")

    positives: list[SmartRecord] = []
    healthy_pool: list[SmartRecord] = []
    for serial in sorted(by_serial):
        rows = sorted(by_serial[serial], key=lambda r: r.date)
        fail_dates = [r.date for r in rows if r.failure == 1]
        if fail_dates:
            fail_day = dt.date.fromisoformat(fail_dates[0])
            first_day = fail_day - dt.timedelta(days=lookback_days - 1)
            positives.extend(
                r for r in rows
                if first_day <= dt.date.fromisoformat(r.date) <= fail_day)
        else:
            healthy_pool.extend(rows)

    if not positives:
        raise DataError(f"no failed disks for model {model_id!r}")

    want = ratio * len(positives)
    if len(healthy_pool) < want:
        warnings.warn(
            f"model {model_id!r}: wanted {want} healthy rows but only "
            f"{len(healthy_pool)} are available; using all of them")
        chosen = np.arange(len(healthy_pool))
    else:
        chosen = rng.choice(len(healthy_pool), size=want, replace=False)
    negatives = [healthy_pool[i] for i in np.sort(chosen)]

    picked = positives + negatives
    features = np.vstack([r.values for r in picked]) if picked else np.empty((0, len(FEATURE_COLUMNS)))
    labels = np.array([1] * len(positives) + [0] * len(negatives), dtype=np.int64)
    return DomainDataset(
        model=model_id,
        features=features,
        labels=labels,
        split=np.array(["train"] * len(picked), dtype=object),
        provenance=dict(provenance or {}),
    )


def split(dataset: DomainDataset, train_fraction: float = 0.7,
          rng: np.random.Generator | None = None) -> DomainDataset:
    """Stratified train/test split, label proportions preserved.

    Per label stratum, floor(n * train_fraction) rows go to train. A
    stratum with fewer than two rows cannot be split; it is sent to
    train entirely, with a warning.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if rng is None:
        raise ParameterError("split needs an rng for shuffling")
    tags = np.array(["train"] * len(dataset.labels), dtype=object)
    for label in np.unique(dataset.labels):
        idx = np.flatnonzero(dataset.labels == label)
        if len(idx) < 2:
            warnings.warn(
                f"model {dataset.model!r}: label {label} stratum has "
                f"{len(idx)} row(s); assigning to train without a test share")
            continue
        order = rng.permutation(len(idx))
        n_train = int(np.floor(len(idx) * train_fraction))
        tags[idx[order[n_train:]]] = "test"
    return replace(dataset, split=tags)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature min/max fitted on a training split."""

    x_min: np.ndarray
    x_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_min", np.asarray(self.x_min, dtype=np.float64))
        object.__setattr__(self, "x_max", np.asarray(self.x_max, dtype=np.float64))
        if self.x_min.shape != self.x_max.shape or self.x_min.ndim != 1:
            raise ShapeError(
                f"x_min {self.x_min.shape} and x_max {self.x_max.shape} must be "
                f"equal-length vectors")
        if np.any(self.x_max < self.x_min):
            raise ParameterError("x_max must be >= x_min for every feature")

    @classmethod
    def from_features(cls, features) -> "NormalizationStats":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ShapeError(f"need a non-empty 2-D feature block, got {features.shape}")
        return cls(x_min=features.min(axis=0), x_max=features.max(axis=0))


def normalize(features, stats: NormalizationStats) -> np.ndarray:
    """Map features into [-1, 1]: midpoint to 0, fitted extremes to +-1.

    Out-of-range values clip to the boundary; a feature whose fitted min
    and max coincide carries no information and maps to 0.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != stats.x_min.shape[0]:
        raise ShapeError(
            f"features {features.shape} do not match stats with "
            f"{stats.x_min.shape[0]} features")
    span = stats.x_max - stats.x_min
    safe = np.where(span > 0.0, span, 1.0)
    scaled = 2.0 * (features - stats.x_min) / safe - 1.0
    scaled = np.where(span > 0.0, scaled, 0.0)
    return np.clip(scaled, -1.0, 1.0)


def normalize_pair(source: DomainDataset, target: DomainDataset,
                   mode: str = "shared"):
    """Normalize a domain pair for training.

    'shared' fits stats on the source training split and applies them to
    both domains; 'per_domain' gives each domain its own training-split
    stats. Returns (source', target', stats_applied_to_target).
    """
    if mode not in ("shared", "per_domain"):
        raise ParameterError(f"mode must be 'shared' or 'per_domain', got {mode!r}")
    src_stats = NormalizationStats.from_features(
        source.features[source.rows(split="train")])
    if mode == "shared":
        tgt_stats = src_stats
    else:
        tgt_stats = NormalizationStats.from_features(
            target.features[target.rows(split="train")])
    src_norm = replace(source, features=normalize(source.features, src_stats))
    tgt_norm = replace(target, features=normalize(target.features, tgt_stats))
    return src_norm, tgt_norm, tgt_stats


def save_domain(dataset: DomainDataset, csv_path, sidecar_path,
                stats: NormalizationStats, manifest_name: str = "manifest.json") -> None:
    """Write a dataset file (raw values + label + split) and its sidecar."""
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest_name}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_COLUMNS) + ["label", "split"])
        for row, label, tag in zip(dataset.features, dataset.labels, dataset.split):
            writer.writerow([repr(float(v)) for v in row] + [int(label), tag])
    sidecar = {
        "version": DATASET_VERSION,
        "model": dataset.model,
        "features": list(FEATURE_COLUMNS),
        "x_min": {name: float(v) for name, v in zip(FEATURE_COLUMNS, stats.x_min)},
        "x_max": {name: float(v) for name, v in zip(FEATURE_COLUMNS, stats.x_max)},
        "provenance": dataset.provenance,
        "counts": {
            "rows": int(len(dataset.labels)),
            "failures": int(dataset.labels.sum()),
            "train": int(np.sum(dataset.split == "train")),
            "test": int(np.sum(dataset.split == "test")),
        },
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sidecar_path_for(csv_path) -> str:
    text = str(csv_path)
    base = text[:-4] if text.endswith(".csv") else text
    return base + ".stats.json"


def load_domain(csv_path, sidecar_path=None):
    """Read a dataset file back. Returns (DomainDataset, stats_or_None)."""
    if sidecar_path is None:
        sidecar_path = sidecar_path_for(csv_path)
    if not Path(csv_path).is_file():
        raise DataError(f"dataset file {csv_path} does not exist")
    rows = []
    with open(csv_path, newline="") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{csv_path}: empty dataset file")
        expected = list(FEATURE_COLUMNS) + ["label", "split"]
        if header != expected:
            raise SchemaError(
                f"{csv_path}: header {header} does not match expected columns {expected}")
        rows = list(reader)

    n = len(rows)
    features = np.empty((n, len(FEATURE_COLUMNS)))
    labels = np.empty(n, dtype=np.int64)
    tags = np.empty(n, dtype=object)
    for i, row in enumerate(rows):
        features[i] = [float(v) for v in row[:len(FEATURE_COLUMNS)]]
        labels[i] = int(row[len(FEATURE_COLUMNS)])
        tags[i] = row[len(FEATURE_COLUMNS) + 1]

    stats = None
    model = ""
    provenance: dict = {}
    try:
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
        model = sidecar.get("model", "")
        provenance = sidecar.get("provenance", {})
        stats = NormalizationStats(
            x_min=np.array([sidecar["x_min"][name] for name in FEATURE_COLUMNS]),
            x_max=np.array([sidecar["x_max"][name] for name in FEATURE_COLUMNS]),
        )
    except FileNotFoundError:
        pass
    dataset = DomainDataset(
        model=model, features=features, labels=labels, split=tags,
        provenance=provenance)
    return dataset, stats

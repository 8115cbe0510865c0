"""Synthetic data: a two-domain Gaussian benchmark and SMART-style fixtures.

The Gaussian benchmark draws two classes from correlated normals and
derives the target domain by pushing the same class conditionals through
a fixed affine map (rotation + per-axis scaling + offset), so the two
domains share structure that feature alignment can recover while a
classifier trained on raw source features transfers poorly. The map and
correlation structure come from a fixed internal seed; the per-call seed
only varies the sampled points and the split, which is what replicate
seeds are expected to vary.

The fixture writer emits miniature daily drive-stats CSVs with the real
column layout so the ingestion path can be exercised end to end without
the multi-gigabyte public dataset.
"""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from .pipeline import FEATURE_COLUMNS, DomainDataset, split
from .util import make_rng, subseed

_DIM = len(FEATURE_COLUMNS)
_STRUCTURE_SEED = 912430


def _benchmark_structure(dim: int, class_gap: float, rotation: float,
                         scale_lo: float, scale_hi: float, offset: float,
                         align: float):
    """Fixed class means, covariance factor, and target affine map."""
    master = make_rng(_STRUCTURE_SEED)
    direction = master.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    mu0 = np.zeros(dim)
    mu1 = class_gap * direction
    cov_factor = np.eye(dim) + 0.3 * master.standard_normal((dim, dim)) / np.sqrt(dim)

    rot = np.eye(dim)
    for a, b in ((0, 1), (2, 3), (4, 5)):
        plane = np.eye(dim)
        c, s = np.cos(rotation), np.sin(rotation)
        plane[a, a] = c
        plane[a, b] = -s
        plane[b, a] = s
        plane[b, b] = c
        rot = plane @ rot
    scales = master.uniform(scale_lo, scale_hi, size=dim)
    lin = np.diag(scales) @ rot
    # align is the cosine between the offset and the class direction: the
    # along-class component displaces the decision boundary (so a source
    # classifier genuinely transfers worse) while the orthogonal remainder
    # moves the marginals without touching the boundary
    raw = master.standard_normal(dim)
    orth = raw - (raw @ direction) * direction
    orth /= np.linalg.norm(orth)
    shift_dir = align * direction + np.sqrt(1.0 - align ** 2) * orth
    shift = offset * shift_dir
    return mu0, mu1, cov_factor, lin, shift


def _draw(rng, mu, cov_factor, n):
    return mu + rng.standard_normal((n, len(mu))) @ cov_factor.T


def two_domain_gaussians(seed: int, n_source: int = 5000, n_target: int = 500,
                         class_gap: float = 2.0, rotation: float = 0.55,
                         scale_lo: float = 0.75, scale_hi: float = 1.25,
                         offset: float = 1.6, align: float = 0.3,
                         train_fraction: float = 0.7):
    """Sample the shifted-Gaussian pair. Returns (source_ds, target_ds).

    Both domains are imbalanced roughly 1:10 (454/4546 positives/negatives
    at the default source size, 45/455 at the default target size) and
    arrive already split into train/test strata.
    """
    mu0, mu1, cov_factor, lin, shift = _benchmark_structure(
        _DIM, class_gap, rotation, scale_lo, scale_hi, offset, align)

    def build(name: str, n_rows: int, transform: bool, rng) -> DomainDataset:
        n_pos = max(1, round(n_rows / 11))
        n_neg = n_rows - n_pos
        x_neg = _draw(rng, mu0, cov_factor, n_neg)
        x_pos = _draw(rng, mu1, cov_factor, n_pos)
        x = np.vstack([x_pos, x_neg])
        if transform:
            x = x @ lin.T + shift
        labels = np.array([1] * n_pos + [0] * n_neg, dtype=np.int64)
        ds = DomainDataset(
            model=name, features=x, labels=labels,
            split=np.array(["train"] * n_rows, dtype=object),
            provenance={"generator": "two_domain_gaussians", "seed": int(seed)})
        return split(ds, train_fraction=train_fraction, rng=rng)

    source = build("synth-source", n_source, False, make_rng(subseed(seed, "source-domain")))
    target = build("synth-target", n_target, True, make_rng(subseed(seed, "target-domain")))
    return source, target


# Column layout of the public daily drive-stats files (abridged but real
# names; every selected attribute is present plus a spread of others so
# column selection is actually exercised).
_EXTRA_SMART = (2, 4, 8, 10, 12, 188, 190, 192, 193, 196, 198, 199, 240, 241, 242)
FIXTURE_HEADER = ("date", "serial_number", "model", "capacity_bytes", "failure") + tuple(
    name
    for attr in sorted({1, 3, 5, 7, 9, 187, 189, 194, 197, *_EXTRA_SMART})
    for name in (f"smart_{attr}_normalized", f"smart_{attr}_raw")
)


def write_smart_fixture(out_dir, models=("fixA", "fixB", "fixC"),
                        disks_per_model: int = 24, days: int = 30,
                        failures_per_model: int = 6, seed: int = 0,
                        start: str = "2021-01-01") -> list[Path]:
    """Write miniature daily CSVs in the drive-stats layout.

    Failed disks degrade over their last week, report failure=1 on their
    final day, and stop reporting afterwards, mirroring how the real
    feed behaves. Returns the file paths written, one per day.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = make_rng(subseed(seed, "smart-fixture"))
    first_day = dt.date.fromisoformat(start)

    disks = []
    for m, model in enumerate(models):
        base_shift = 3.0 * m
        for i in range(disks_per_model):
            serial = f"{model.upper()}-{i:04d}"
            fails = i < failures_per_model
            fail_day = int(rng.integers(days // 2, days)) if fails else None
            disks.append({
                "serial": serial, "model": model, "fail_day": fail_day,
                "base": 100.0 - base_shift - rng.uniform(0.0, 4.0),
                "hours": float(rng.integers(1000, 30000)),
            })

    paths = []
    for day in range(days):
        date = (first_day + dt.timedelta(days=day)).isoformat()
        path = out_dir / f"{date}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FIXTURE_HEADER)
            for disk in disks:
                if disk["fail_day"] is not None and day > disk["fail_day"]:
                    continue
                failing_in = (disk["fail_day"] - day) if disk["fail_day"] is not None else None
                stress = max(0.0, 7.0 - failing_in) if failing_in is not None and failing_in < 7 else 0.0
                failure = 1 if failing_in == 0 else 0
                health = disk["base"] - 2.5 * stress - rng.uniform(0.0, 1.0)
                raw_errors = int(stress * rng.integers(2, 9))
                values = {
                    "smart_1_normalized": round(health + rng.uniform(-2, 2), 1),
                    "smart_3_normalized": round(95.0 - 0.3 * stress + rng.uniform(-1, 1), 1),
                    "smart_5_normalized": round(100.0 - 3.0 * stress, 1),
                    "smart_5_raw": raw_errors,
                    "smart_7_normalized": round(health + rng.uniform(-3, 3), 1),
                    "smart_9_normalized": round(max(1.0, 100.0 - disk["hours"] / 600.0), 1),
                    "smart_187_normalized": round(100.0 - 4.0 * stress, 1),
                    "smart_189_normalized": round(100.0 - rng.uniform(0, 2) - stress, 1),
                    "smart_194_normalized": round(60.0 + 1.5 * stress + rng.uniform(-4, 4), 1),
                    "smart_197_normalized": round(100.0 - 5.0 * stress, 1),
                    "smart_197_raw": raw_errors * 2,
                }
                row = [date, disk["serial"], disk["model"], 4000787030016, failure]
                for column in FIXTURE_HEADER[5:]:
                    if column in values:
                        row.append(values[column])
                    elif column.endswith("_normalized"):
                        row.append(100)
                    else:
                        row.append(0)
                writer.writerow(row)
                disk["hours"] += 24.0
        paths.append(path)
    return paths

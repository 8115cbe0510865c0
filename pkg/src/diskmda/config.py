"""Benchmark configuration files: JSON schema, loading, validation.

A benchmark config names the domain datasets to cross, the variants and
seeds to run, and the training/network settings shared by every cell.
Relative paths inside a config resolve against the config file's own
directory so a config can travel with its data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import jsonschema

from .da import KernelSpec
from .errors import SchemaError
from .evaluation import ExperimentSpec
from .network import NetworkConfig
from .training import TrainConfig
from .weighting import VARIANTS

_KERNEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["gaussian", "linear"]},
        "bandwidth": {"type": ["number", "null"], "exclusiveMinimum": 0},
    },
}

_NETWORK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "input_dim": {"type": "integer", "minimum": 1},
        "fc1_width": {"type": "integer", "minimum": 1},
        "fc2_width": {"type": "integer", "minimum": 1},
        "dropout_rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    },
}

_TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 2},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "optimizer": {"enum": ["adam", "sgd"]},
        "weighting": {"enum": ["dynamic", "gamma"]},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "kernel": _KERNEL_SCHEMA,
        "discrepancy_cap": {"type": "integer", "minimum": 2},
    },
}

BENCHMARK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["sources", "targets"],
    "properties": {
        "data_dir": {"type": "string", "minLength": 1},
        "output_dir": {"type": "string", "minLength": 1},
        "sources": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"type": "string", "minLength": 1},
        },
        "targets": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"type": "string", "minLength": 1},
        },
        "variants": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"enum": list(VARIANTS)},
        },
        "seeds": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"type": "integer", "minimum": 0},
        },
        "normalization": {"enum": ["shared", "per_domain"]},
        "network": _NETWORK_SCHEMA,
        "train": _TRAIN_SCHEMA,
        "formats": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"enum": ["csv", "md", "svg"]},
        },
        "include_timings": {"type": "boolean"},
    },
}


@dataclass(frozen=True)
class BenchmarkConfig:
    """A validated benchmark: the experiment grid plus I/O settings."""

    spec: ExperimentSpec
    data_dir: Path | None
    output_dir: Path | None
    formats: tuple[str, ...] = ("csv", "md", "svg")
    include_timings: bool = False
    source_path: Path | None = field(default=None, compare=False)


def _build_section(cls, section: dict, base=None):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise SchemaError(f"unknown key '{unknown[0]}' for {cls.__name__}")
    if base is None:
        return cls(**section)
    return replace(base, **section)


def load_benchmark_config(path) -> BenchmarkConfig:
    """Parse and validate a benchmark config file.

    Raises SchemaError for unreadable JSON or anything the schema or the
    component constructors reject, so callers can treat every config
    problem as one error class.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc

    try:
        jsonschema.validate(raw, BENCHMARK_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise SchemaError(f"{path}: {exc.message} at {where}") from exc

    train_section = dict(raw.get("train", {}))
    if "kernel" in train_section:
        train_section["kernel"] = KernelSpec(**train_section["kernel"])
    try:
        network = _build_section(NetworkConfig, raw.get("network", {}))
        train = _build_section(TrainConfig, train_section,
                               base=TrainConfig(variant="source_only"))
        spec = ExperimentSpec(
            sources=tuple(raw["sources"]),
            targets=tuple(raw["targets"]),
            variants=tuple(raw.get("variants", VARIANTS)),
            seeds=tuple(raw.get("seeds", (0,))),
            network=network,
            train=train,
            normalization=raw.get("normalization", "shared"),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc

    def resolve(key):
        if key not in raw:
            return None
        p = Path(raw[key])
        return p if p.is_absolute() else (path.parent / p)

    return BenchmarkConfig(
        spec=spec,
        data_dir=resolve("data_dir"),
        output_dir=resolve("output_dir"),
        formats=tuple(raw.get("formats", ("csv", "md", "svg"))),
        include_timings=bool(raw.get("include_timings", False)),
        source_path=path,
    )

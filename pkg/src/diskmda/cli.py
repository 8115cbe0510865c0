"""Command-line entry points.

Four subcommands cover the workflow: ``ingest`` turns daily drive-stats
CSVs into per-model dataset files, ``train`` fits one network, ``evaluate``
scores a checkpoint on a dataset, and ``benchmark`` runs a configured
variant grid and renders the report files.

Every command that writes files also writes a ``manifest.json`` next to
them recording the command line, the seed, timestamps, and a sha256 of
every input and output, so a result can be traced back to what produced
it. Exit codes: 0 success, 1 internal error or divergence, 2 usage or
data problems, 3 array-shape mismatches.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_benchmark_config
from .da import KernelSpec
from .errors import (
    DataError,
    DegenerateWeightsError,
    DivergenceError,
    InsufficientSamplesError,
    ParameterError,
    SchemaError,
    ShapeError,
)
from .evaluation import confusion, g_mean, run_matrix, run_single
from .network import NetworkConfig, load_checkpoint, predict, save_checkpoint
from .pipeline import (
    NormalizationStats,
    build_domain,
    ingest,
    load_domain,
    normalize,
    save_domain,
    sidecar_path_for,
    split,
)
from .report import emit_report, report_id
from .training import TrainConfig, write_history_csv
from .util import file_sha256, make_rng, subseed
from .weighting import VARIANTS

DATA_DIR_ENV = "DISKMDA_DATA_DIR"
MANIFEST_NAME = "manifest.json"

_USAGE_ERRORS = (
    SchemaError,
    ParameterError,
    DataError,
    InsufficientSamplesError,
    DegenerateWeightsError,
)


def _utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _resolve_seed(given: int | None) -> int:
    """Use the given seed, or generate one and announce it."""
    if given is not None:
        return int(given)
    seed = int(np.random.SeedSequence().entropy) & ((1 << 63) - 1)
    print(f"no --seed given; generated seed {seed}")
    return seed


def _resolve_data_dir(flag_value, config_value=None) -> Path:
    """Precedence: command line, then config file, then the environment."""
    if flag_value:
        return Path(flag_value)
    if config_value:
        return Path(config_value)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    raise ParameterError(
        f"no data directory: pass --data-dir, set it in the config, "
        f"or export {DATA_DIR_ENV}")


def _write_manifest(out_dir: Path, command: str, argv, seed,
                    inputs: dict, outputs, started_at: str,
                    details: dict) -> Path:
    manifest = {
        "manifest_version": 1,
        "tool": f"diskmda {__version__}",
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "started_at": started_at,
        "finished_at": _utc_now(),
        "inputs": {str(k): v for k, v in sorted(inputs.items())},
        "outputs": {Path(p).name: file_sha256(p) for p in sorted(outputs, key=str)},
        "details": details,
    }
    path = out_dir / MANIFEST_NAME
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _network_config(args) -> NetworkConfig:
    return NetworkConfig(
        fc1_width=args.fc1_width,
        fc2_width=args.fc2_width,
        dropout_rate=args.dropout_rate,
    )


def _train_config(args, variant: str, seed: int) -> TrainConfig:
    return TrainConfig(
        variant=variant,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        optimizer=args.optimizer,
        seed=seed,
        weighting=args.weighting,
        gamma=args.gamma,
        kernel=KernelSpec(kind=args.kernel, bandwidth=args.bandwidth),
        discrepancy_cap=args.discrepancy_cap,
    )


def cmd_ingest(args, argv) -> int:
    started = _utc_now()
    seed = _resolve_seed(args.seed)
    data_dir = _resolve_data_dir(args.data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} does not exist")
    files = sorted(p for p in data_dir.rglob("*.csv"))
    if not files:
        raise DataError(f"no CSV files under {data_dir}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ingest(files, model_filter=args.model)
    print(f"read {len(files)} file(s), kept {len(result.records)} row(s), "
          f"dropped {result.dropped_rows} incomplete row(s)")

    outputs = []
    per_model = {}
    for model in args.model:
        dataset = build_domain(
            result.records, model, ratio=args.ratio,
            lookback_days=args.lookback_days,
            rng=make_rng(subseed(seed, f"negatives:{model}")))
        dataset = split(dataset, train_fraction=args.train_fraction,
                        rng=make_rng(subseed(seed, f"split:{model}")))
        dataset.provenance.update({
            "command": "ingest", "seed": seed,
            "ratio": args.ratio, "lookback_days": args.lookback_days,
            "train_fraction": args.train_fraction,
        })
        stats = NormalizationStats.from_features(
            dataset.features[dataset.rows(split="train")])
        csv_path = out_dir / f"{model}.csv"
        sidecar = Path(sidecar_path_for(csv_path))
        save_domain(dataset, csv_path, sidecar, stats, manifest_name=MANIFEST_NAME)
        outputs += [csv_path, sidecar]
        n_pos = int(dataset.labels.sum())
        per_model[model] = {"rows": int(len(dataset.labels)), "failures": n_pos}
        print(f"{model}: {len(dataset.labels)} rows ({n_pos} failure rows) "
              f"-> {csv_path}")

    manifest = _write_manifest(
        out_dir, "ingest", argv, seed, result.file_hashes, outputs, started,
        details={"models": per_model, "dropped_rows": result.dropped_rows})
    print(f"manifest: {manifest}")
    return 0


def cmd_train(args, argv) -> int:
    started = _utc_now()
    seed = _resolve_seed(args.seed)
    if args.variant == "target_only" and args.source:
        print("warning: target_only ignores --source", file=sys.stderr)
    if args.variant != "target_only" and not args.source:
        raise ParameterError(f"variant {args.variant!r} needs --source")

    inputs = {}
    source_ds = None
    if args.source and args.variant != "target_only":
        source_ds, _ = load_domain(args.source)
        inputs[args.source] = file_sha256(args.source)
    target_ds, _ = load_domain(args.target)
    inputs[args.target] = file_sha256(args.target)

    net, history, stats, cm, g = run_single(
        source_ds, target_ds, args.variant, seed,
        _network_config(args), _train_config(args, args.variant, seed),
        normalization=args.normalization)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "checkpoint.npz"
    meta = {
        "variant": args.variant, "seed": seed,
        "source": source_ds.model if source_ds else None,
        "target": target_ds.model,
        "normalization": args.normalization,
        "g_mean": g,
    }
    save_checkpoint(net, checkpoint, stats=stats, meta=meta)
    history_path = out_dir / "history.csv"
    write_history_csv(history, history_path, manifest_name=MANIFEST_NAME)

    print(f"{args.variant} seed={seed}: g_mean={g:.4f} "
          f"tp={cm.tp} fn={cm.fn} fp={cm.fp} tn={cm.tn}")
    manifest = _write_manifest(
        out_dir, "train", argv, seed, inputs, [checkpoint, history_path],
        started, details=meta)
    print(f"wrote {checkpoint}")
    print(f"manifest: {manifest}")
    return 0


def cmd_evaluate(args, argv) -> int:
    started = _utc_now()
    net, stats, meta = load_checkpoint(args.checkpoint)
    if stats is None:
        raise DataError(
            f"checkpoint {args.checkpoint} carries no normalization stats; "
            f"cannot map raw features")
    dataset, _ = load_domain(args.data)
    idx = np.arange(len(dataset.labels)) if args.split == "all" \
        else dataset.rows(split=args.split)
    if len(idx) == 0:
        raise DataError(f"no rows in split {args.split!r} of {args.data}")

    feats = normalize(dataset.features[idx], stats)
    _, predicted = predict(net, feats)
    cm = confusion(predicted, dataset.labels[idx])
    g = g_mean(cm)
    print(f"g_mean={g:.4f} tp={cm.tp} fn={cm.fn} fp={cm.fp} tn={cm.tn} "
          f"({len(idx)} rows, split={args.split})")

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.json"
        payload = {
            "g_mean": g, "tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn,
            "rows": int(len(idx)), "split": args.split,
            "checkpoint_meta": meta,
        }
        with open(metrics_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        inputs = {
            args.checkpoint: file_sha256(args.checkpoint),
            args.data: file_sha256(args.data),
        }
        manifest = _write_manifest(
            out_dir, "evaluate", argv, None, inputs, [metrics_path],
            started, details={"split": args.split})
        print(f"wrote {metrics_path}")
        print(f"manifest: {manifest}")
    return 0


def cmd_benchmark(args, argv) -> int:
    started = _utc_now()
    cfg = load_benchmark_config(args.config)
    data_dir = _resolve_data_dir(args.data_dir, cfg.data_dir)
    out_dir = Path(args.out) if args.out else (cfg.output_dir or Path("reports"))
    include_timings = bool(args.include_timings or cfg.include_timings)

    needed = sorted(set(cfg.spec.sources) | set(cfg.spec.targets))
    inputs = {str(args.config): file_sha256(args.config)}
    datasets = {}
    missing = []
    for model in needed:
        path = data_dir / f"{model}.csv"
        if not path.exists():
            missing.append(model)
            continue
        datasets[model], _ = load_domain(path)
        datasets[model].model = datasets[model].model or model
        inputs[str(path)] = file_sha256(path)
    if missing:
        raise DataError(
            f"dataset files missing under {data_dir}: {', '.join(missing)}")

    report = run_matrix(cfg.spec, datasets)
    for err in report.errors:
        print(f"warning: cell ({err.source} -> {err.target}, {err.variant}, "
              f"seed {err.seed}) failed: {err.message}", file=sys.stderr)
    if not report.rows:
        raise DataError("every benchmark cell failed; nothing to report")

    rid = report_id(report)
    paths = emit_report(report, out_dir, formats=cfg.formats,
                        include_timings=include_timings, rid=rid,
                        manifest_name=MANIFEST_NAME)
    for target in report.row_targets():
        for source in report.row_sources(target):
            best = max(report.row_variants(),
                       key=lambda v: report.mean_g(source, target, v))
            print(f"{source} -> {target}: best {best} "
                  f"(mean g_mean {report.mean_g(source, target, best):.4f})")
    for path in paths:
        print(f"wrote {path}")

    details = {
        "report_id": rid,
        "cells_ok": len(report.rows),
        "cells_failed": len(report.errors),
        "errors": [
            {"source": e.source, "target": e.target, "variant": e.variant,
             "seed": e.seed, "message": e.message}
            for e in report.errors
        ],
        "wall_ms": {
            f"{r.target}|{r.source}|{r.variant}|{r.seed}": round(r.wall_ms, 3)
            for r in report.rows
        },
    }
    manifest = _write_manifest(
        out_dir, "benchmark", argv, list(cfg.spec.seeds), inputs, paths,
        started, details)
    print(f"manifest: {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diskmda",
        description="Domain-adaptive disk failure prediction on SMART data.")
    parser.add_argument("--version", action="version",
                        version=f"diskmda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser(
        "ingest", help="build per-model dataset files from daily drive-stats CSVs")
    p_ingest.add_argument("--data-dir", help=f"directory of daily CSVs "
                          f"(default: ${DATA_DIR_ENV})")
    p_ingest.add_argument("--model", action="append", required=True,
                          help="drive model to extract (repeatable)")
    p_ingest.add_argument("--out", required=True, help="output directory")
    p_ingest.add_argument("--ratio", type=int, default=10,
                          help="healthy rows per failure row (default 10)")
    p_ingest.add_argument("--lookback-days", type=int, default=1,
                          help="days before failure counted as failure rows")
    p_ingest.add_argument("--train-fraction", type=float, default=0.7)
    p_ingest.add_argument("--seed", type=int, default=None)
    p_ingest.set_defaults(func=cmd_ingest)

    p_train = sub.add_parser("train", help="train one variant on a domain pair")
    p_train.add_argument("--source", help="source dataset CSV (from ingest)")
    p_train.add_argument("--target", required=True, help="target dataset CSV")
    p_train.add_argument("--variant", required=True, choices=VARIANTS)
    p_train.add_argument("--epochs", type=int, default=100)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p_train.add_argument("--weighting", choices=("dynamic", "gamma"),
                         default="dynamic")
    p_train.add_argument("--gamma", type=float, default=10.0)
    p_train.add_argument("--kernel", choices=("gaussian", "linear"),
                         default="gaussian")
    p_train.add_argument("--bandwidth", type=float, default=None,
                         help="kernel bandwidth (default: median heuristic)")
    p_train.add_argument("--discrepancy-cap", type=int, default=2048)
    p_train.add_argument("--fc1-width", type=int, default=256)
    p_train.add_argument("--fc2-width", type=int, default=128)
    p_train.add_argument("--dropout-rate", type=float, default=0.5)
    p_train.add_argument("--normalization", choices=("shared", "per_domain"),
                         default="shared")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="dataset CSV to score")
    p_eval.add_argument("--split", choices=("test", "train", "all"),
                        default="test")
    p_eval.add_argument("--out", help="optional directory for metrics.json")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser(
        "benchmark", help="run a configured variant grid and render reports")
    p_bench.add_argument("--config", required=True, help="benchmark JSON config")
    p_bench.add_argument("--data-dir",
                         help=f"dataset directory (default: config, then ${DATA_DIR_ENV})")
    p_bench.add_argument("--out", help="report directory (default: config, then ./reports)")
    p_bench.add_argument("--include-timings", action="store_true",
                         help="fill the wall_ms column in the report CSV")
    p_bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001 - last-resort mapping to exit code 1
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())

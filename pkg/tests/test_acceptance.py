"""End-to-end acceptance checks.

One test per release gate. Each prints a single verdict line of the form
``acceptance <name>: PASS/FAIL [<wall>s] <detail>`` (run pytest with -s to
see the lines on success) and enforces both the numeric tolerance and the
runtime budget of its gate.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from diskmda import da
from diskmda.cli import main
from diskmda.da import KernelSpec
from diskmda.evaluation import ConfusionMatrix, g_mean, run_single
from diskmda.network import NetworkConfig, forward, init_network
from diskmda.nn import softmax_cross_entropy
from diskmda.pipeline import (
    FEATURE_COLUMNS,
    NormalizationStats,
    build_domain,
    ingest,
    normalize,
    split,
)
from diskmda.synthetic import two_domain_gaussians, write_smart_fixture
from diskmda.training import TrainConfig, compute_step
from diskmda.util import make_rng
from diskmda.weighting import (
    VARIANTS,
    is_adaptive,
    total_loss,
    variant_layers,
    variant_uses_coral,
    variant_uses_mmd,
)
from oracles import fd_gradient, g_mean_scalar, rel_err

ADAPTIVE_VARIANTS = tuple(v for v in VARIANTS if is_adaptive(v))

# Synthetic benchmark used by the transfer-direction and determinism
# gates. The geometry shifts the target in both mean and covariance; the
# fixed-gamma objective keeps every discrepancy term active so each
# adaptive variant visibly moves its layer-1 alignment.
BENCH_GEOMETRY = dict(class_gap=3.0, rotation=0.0, scale_lo=0.8,
                      scale_hi=1.2, offset=3.0, align=0.45)
BENCH_NET = NetworkConfig(input_dim=11, fc1_width=48, fc2_width=24,
                          dropout_rate=0.25)
BENCH_TRAIN = TrainConfig(variant="source_only", epochs=40, batch_size=64,
                          learning_rate=1e-3, discrepancy_cap=256)
BENCH_SEEDS = tuple(range(10))


def _clear_kinks(net, rows, margin=1e-3):
    """Shift biases so no relu preactivation sits within margin of zero.

    Central differences straddle the relu kink, so the probe point must
    keep every preactivation at least margin away from it. Dropout is
    disabled on gradient probes, so h1 == relu(z1) exactly.
    """
    candidates = np.linspace(-0.06, 0.06, 25)

    def clear(pre, bias):
        for j in range(pre.shape[1]):
            col = pre[:, j]
            bias[j] += max(candidates,
                           key=lambda d: np.min(np.abs(col + d)))

    clear(rows @ net.fc1.w + net.fc1.b, net.fc1.b)
    z1 = rows @ net.fc1.w + net.fc1.b
    h1 = np.maximum(z1, 0.0)
    clear(h1 @ net.fc2.w + net.fc2.b, net.fc2.b)
    z2 = h1 @ net.fc2.w + net.fc2.b
    worst = min(np.min(np.abs(z1)), np.min(np.abs(z2)))
    assert worst > margin, f"could not clear relu kinks, margin {worst:.1e}"


def _run(name: str, budget_s: float, body):
    """Run one gate, print its verdict line, re-raise on failure."""
    t0 = time.perf_counter()
    try:
        detail = body()
        wall = time.perf_counter() - t0
        assert wall < budget_s, f"runtime {wall:.2f}s exceeds {budget_s:.0f}s budget"
    except BaseException as exc:
        wall = time.perf_counter() - t0
        print(f"acceptance {name}: FAIL [{wall:.2f}s] {type(exc).__name__}: {exc}")
        raise
    print(f"acceptance {name}: PASS [{wall:.2f}s] {detail}")


# --------------------------------------------------------------- gate 1


def test_gradient_fidelity():
    """Analytic gradients match central finite differences per variant."""

    def body():
        cfg = NetworkConfig(input_dim=6, fc1_width=8, fc2_width=8,
                            dropout_rate=0.0)
        kernel = KernelSpec(bandwidth=1.0)
        worst = 0.0
        for k, variant in enumerate(VARIANTS):
            rng = make_rng(4200 + k)
            net = init_network(cfg, rng)
            xs = rng.standard_normal((10, 6))
            ys = np.array([0, 1] * 5)
            xt = rng.standard_normal((12, 6)) + 0.4
            layers = variant_layers(variant)
            tgt = xt if layers else None
            _clear_kinks(net, np.vstack([xs, xt]) if layers else xs)

            breakdown, grads = compute_step(
                net, xs, ys, tgt, variant, kernel=kernel, mode="eval")

            def total():
                trace_s = forward(net, xs, mode="eval")
                l_class, _ = softmax_cross_entropy(trace_s.logits, ys)
                value = breakdown.n * l_class
                if layers:
                    trace_t = forward(net, xt, mode="eval")
                    for pos, layer in enumerate(layers):
                        fs = (trace_s.layer1_feats if layer == 1
                              else trace_s.layer2_feats)
                        ft = (trace_t.layer1_feats if layer == 1
                              else trace_t.layer2_feats)
                        if variant_uses_mmd(variant):
                            value += breakdown.x[pos] * da.mmd_loss(fs, ft, kernel)[0]
                        if variant_uses_coral(variant):
                            value += breakdown.y[pos] * da.coral_loss(fs, ft)[0]
                return float(value)

            for pname, arr in net.params().items():
                fd = fd_gradient(total, arr, eps=1e-5)
                # central differences on a loss of order one resolve
                # gradients only down to ~1e-11 absolute (roundoff over
                # 2*eps), so entries below the floor compare against it
                err = rel_err(grads[pname], fd, floor=1e-6)
                assert err < 1e-4, f"{variant} {pname}: rel err {err:.2e}"
                worst = max(worst, err)
        return f"max rel err {worst:.1e} over {len(VARIANTS)} variants"

    _run("gradient-fidelity", 10.0, body)


# --------------------------------------------------------------- gate 2


def test_metric_identities():
    """MMD and CORAL obey their defining identities and toy values."""

    def body():
        rng = make_rng(7)
        x = rng.standard_normal((40, 5))
        y = rng.standard_normal((35, 5)) + 0.3

        assert da.mmd_loss(x, x.copy())[0] <= 1e-10
        assert da.coral_loss(x, x.copy())[0] <= 1e-10
        assert abs(da.mmd_loss(x, y)[0] - da.mmd_loss(y, x)[0]) <= 1e-12
        assert abs(da.coral_loss(x, y)[0] - da.coral_loss(y, x)[0]) <= 1e-12

        shift_s, shift_t = rng.standard_normal(5), rng.standard_normal(5)
        base = da.coral_loss(x, y)[0]
        moved = da.coral_loss(x + shift_s, y + shift_t)[0]
        assert abs(base - moved) <= 1e-10

        lin = KernelSpec(kind="linear")
        toy_mmd = da.mmd_loss(np.array([[0.0], [2.0]]),
                              np.array([[1.0], [3.0]]), lin)[0]
        assert toy_mmd == 1.0

        toy_coral = da.coral_loss(np.array([[0.0], [4.0]]),
                                  np.array([[1.0], [3.0]]))[0]
        assert toy_coral == 9.0
        return "self-tests, symmetry, translation, both toys exact"

    _run("metric-identities", 1.0, body)


# --------------------------------------------------------------- gate 3


def test_weight_scheme():
    """Dynamic weights: sum to one, scale-invariant, closed-form total."""

    def body():
        rng = make_rng(11)
        worst_sum = worst_scale = worst_total = 0.0
        for _ in range(1000):
            l_class = float(rng.uniform(0.05, 3.0))
            l_mmd = tuple(float(v) for v in rng.uniform(0.01, 2.0, size=2))
            l_coral = tuple(float(v) for v in rng.uniform(0.01, 2.0, size=2))
            bd = total_loss("double_coral_mmd", l_class, l_mmd, l_coral)

            weight_sum = bd.n + sum(bd.x) + sum(bd.y)
            worst_sum = max(worst_sum, abs(weight_sum - 1.0))

            c = float(rng.uniform(0.1, 10.0))
            scaled = total_loss(
                "double_coral_mmd", c * l_class,
                tuple(c * v for v in l_mmd), tuple(c * v for v in l_coral))
            drift = max(
                abs(bd.n - scaled.n),
                max(abs(a - b) for a, b in zip(bd.x, scaled.x)),
                max(abs(a - b) for a, b in zip(bd.y, scaled.y)))
            worst_scale = max(worst_scale, drift)

            losses = [l_class, *l_mmd, *l_coral]
            expected = sum(v * v for v in losses) / sum(losses)
            worst_total = max(worst_total,
                              abs(bd.total - expected) / abs(expected))

        assert worst_sum < 1e-12, f"weight sums off by {worst_sum:.2e}"
        assert worst_scale < 1e-12, f"scaling moved weights by {worst_scale:.2e}"
        assert worst_total < 1e-12, f"total identity off by {worst_total:.2e}"
        return ("1000 tuples: sum-to-one, scale-invariance, "
                "total == sum(l^2)/sum(l)")

    _run("weight-scheme", 1.0, body)


# --------------------------------------------------------------- gate 4


def test_pipeline_exactness(tmp_path):
    """Normalization endpoints, exact 1:10 and split counts, column order."""

    def body():
        # midpoint constants are chosen binary-exact so the mapped values
        # are exactly -1, +1, 0
        lo = np.array([0.0, -1.0, 2.0])
        hi = np.array([4.0, 1.0, 10.0])
        mid = (lo + hi) / 2.0
        stats = NormalizationStats.from_features(np.vstack([lo, hi]))
        mapped = normalize(np.vstack([lo, hi, mid]), stats)
        assert np.array_equal(mapped[0], [-1.0, -1.0, -1.0])
        assert np.array_equal(mapped[1], [1.0, 1.0, 1.0])
        assert np.array_equal(mapped[2], [0.0, 0.0, 0.0])

        fixture_dir = tmp_path / "smart"
        write_smart_fixture(fixture_dir, models=("fixA",), disks_per_model=80,
                            days=20, failures_per_model=6, seed=3)
        files = sorted(fixture_dir.rglob("*.csv"))
        result = ingest(files, model_filter={"fixA"})

        domain = build_domain(result.records, "fixA", ratio=10,
                              rng=make_rng(5))
        n_pos = int(np.sum(domain.labels == 1))
        n_neg = int(np.sum(domain.labels == 0))
        assert n_pos == 6, f"expected 6 failure rows, got {n_pos}"
        assert n_neg == 60, f"expected exactly 10 healthy rows per failure, got {n_neg}"

        parts = split(domain, train_fraction=0.7, rng=make_rng(6))
        train_pos = int(np.sum((parts.split == "train") & (parts.labels == 1)))
        train_neg = int(np.sum((parts.split == "train") & (parts.labels == 0)))
        assert train_pos == math.floor(6 * 0.7) == 4
        assert train_neg == math.floor(60 * 0.7) == 42
        assert int(np.sum(parts.split == "test")) == 66 - 4 - 42

        # column order: values must follow the selected-attribute order,
        # not the file's column order
        with open(files[0], encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            first = fh.readline().strip().split(",")
        by_name = dict(zip(header, first))
        expected = np.array([float(by_name[c]) for c in FEATURE_COLUMNS])
        got = next(
            r.values for r in result.records
            if r.date == by_name["date"]
            and r.serial_number == by_name["serial_number"])
        assert np.array_equal(got, expected)
        return "endpoints exact, 6/60 then 4/42 splits exact, column order"

    _run("pipeline-exactness", 1.0, body)


# --------------------------------------------------------------- gate 5


def test_g_mean_oracle():
    """g_mean matches a scalar oracle and pins its special values."""

    def body():
        rng = make_rng(17)
        worst = 0.0
        for _ in range(10_000):
            tp, fn, fp, tn = (int(v) for v in rng.integers(0, 40, size=4))
            cm = ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)
            got = g_mean(cm)
            want = g_mean_scalar(tp, fn, fp, tn)
            worst = max(worst, abs(got - want))
        assert worst < 1e-12, f"oracle mismatch {worst:.2e}"

        assert g_mean(ConfusionMatrix(0, 7, 3, 5)) == 0.0
        assert g_mean(ConfusionMatrix(0, 0, 3, 5)) == 0.0
        assert g_mean(ConfusionMatrix(4, 2, 5, 0)) == 0.0
        assert g_mean(ConfusionMatrix(4, 2, 0, 0)) == 0.0

        half = g_mean(ConfusionMatrix(tp=10, fn=0, fp=5, tn=5))
        assert half == pytest.approx(math.sqrt(0.5), abs=1e-12)
        assert f"{half:.4f}" == "0.7071"
        return f"10^4 matrices, max abs diff {worst:.1e}, 0.0000 and 0.7071 pinned"

    _run("g-mean-oracle", 1.0, body)


# --------------------------------------------------------------- gate 6


def test_transfer_direction():
    """Adaptation beats source-only and both layers beat one on the
    shifted-Gaussian benchmark; adaptive variants reduce layer-1 MMD."""

    def body():
        g_wins = {v: [] for v in VARIANTS}
        drops = {v: 0 for v in ADAPTIVE_VARIANTS}
        for seed in BENCH_SEEDS:
            source, target = two_domain_gaussians(seed, **BENCH_GEOMETRY)
            for variant in VARIANTS:
                _, history, _, _, g = run_single(
                    source, target, variant, seed, BENCH_NET, BENCH_TRAIN)
                g_wins[variant].append(g)
                if variant in drops:
                    trace = [rec.mmd[0] for rec in history.discrepancy]
                    assert len(trace) == BENCH_TRAIN.epochs
                    if trace[-1] < trace[0]:
                        drops[variant] += 1

        mean = {v: float(np.mean(g_wins[v])) for v in VARIANTS}
        n_seeds = len(BENCH_SEEDS)

        # every sub-check is evaluated before any verdict so a failure
        # still reports the complete picture
        problems = []
        gap = mean["double_coral_mmd"] - mean["source_only"]
        if gap < 0.03:
            problems.append(
                f"double_coral_mmd {mean['double_coral_mmd']:.4f} vs "
                f"source_only {mean['source_only']:.4f}: gap {gap:+.4f} < +0.03")
        for double, single in (("double_coral", "single_coral"),
                               ("double_mmd", "single_mmd"),
                               ("double_coral_mmd", "single_coral_mmd")):
            diff = mean[double] - mean[single]
            if diff < -0.01:
                problems.append(
                    f"{double} {mean[double]:.4f} vs {single} "
                    f"{mean[single]:.4f}: diff {diff:+.4f} < -0.01")
        for variant, count in drops.items():
            if count < 8:
                problems.append(
                    f"{variant}: layer-1 MMD fell from first to final epoch "
                    f"in only {count}/{n_seeds} seeds (need 8)")

        summary = ", ".join(f"{v}={mean[v]:.4f}" for v in VARIANTS)
        drop_txt = ", ".join(f"{v} {c}/{n_seeds}" for v, c in drops.items())
        assert not problems, (
            f"{len(problems)} sub-check(s) failed: " + "; ".join(problems)
            + f" || means: {summary} || mmd1 drops: {drop_txt}")
        return f"gap {gap:+.4f}; {summary}; mmd1 drops: {drop_txt}"

    _run("transfer-direction", 300.0, body)


# --------------------------------------------------------------- gate 7


def _render_benchmark(root: Path, out_name: str) -> Path:
    data_dir = root / "datasets"
    out_dir = root / out_name
    config = {
        "sources": ["fixA"],
        "targets": ["fixB"],
        "variants": ["source_only", "single_mmd"],
        "seeds": [0, 1],
        "data_dir": str(data_dir),
        "output_dir": str(out_dir),
        "network": {"fc1_width": 8, "fc2_width": 6, "dropout_rate": 0.25},
        "train": {"epochs": 2, "batch_size": 8, "learning_rate": 1e-2,
                  "discrepancy_cap": 32},
    }
    config_path = root / f"{out_name}.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert main(["benchmark", "--config", str(config_path)]) == 0
    return out_dir


def test_benchmark_determinism(tmp_path):
    """Rerunning a benchmark config reproduces every report byte."""

    def body():
        fixture_dir = tmp_path / "smart"
        write_smart_fixture(fixture_dir, models=("fixA", "fixB"),
                            disks_per_model=24, days=14,
                            failures_per_model=4, seed=0)
        assert main(["ingest", "--data-dir", str(fixture_dir),
                     "--model", "fixA", "--model", "fixB",
                     "--out", str(tmp_path / "datasets"),
                     "--seed", "9"]) == 0

        first = _render_benchmark(tmp_path, "run1")
        second = _render_benchmark(tmp_path, "run2")

        names_first = sorted(p.name for p in first.iterdir())
        names_second = sorted(p.name for p in second.iterdir())
        assert names_first == names_second
        compared = []
        for name in names_first:
            if name == "manifest.json":  # carries timestamps by design
                continue
            assert (first / name).read_bytes() == (second / name).read_bytes(), (
                f"{name} differs between reruns")
            compared.append(name)
        suffixes = {Path(n).suffix for n in compared}
        assert {".csv", ".md", ".svg"} <= suffixes
        return f"{len(compared)} artifacts byte-identical ({sorted(suffixes)})"

    _run("determinism", 120.0, body)


# --------------------------------------------------------------- gate 8


@pytest.mark.skipif(
    "DISKMDA_DATA_DIR" not in __import__("os").environ,
    reason="set DISKMDA_DATA_DIR to a directory of daily drive-stats CSVs "
           "to run the real-data smoke check")
def test_real_data_smoke(tmp_path):
    """Build the two real drive-model domains, adapt, and report."""

    def body():
        import os

        from diskmda.evaluation import ExperimentSpec, run_matrix
        from diskmda.report import render_markdown

        data_dir = Path(os.environ["DISKMDA_DATA_DIR"])
        files = sorted(str(p) for p in data_dir.rglob("*.csv"))
        assert files, f"no CSV files under {data_dir}"
        result = ingest(files, model_filter={"ST4000DM000", "ST10000NM0086"})

        datasets = {}
        for idx, model in enumerate(("ST4000DM000", "ST10000NM0086")):
            domain = build_domain(result.records, model, ratio=10,
                                  rng=make_rng(100 + idx))
            datasets[model] = split(domain, train_fraction=0.7,
                                    rng=make_rng(200 + idx))

        spec = ExperimentSpec(
            sources=("ST4000DM000",),
            targets=("ST10000NM0086",),
            variants=("double_coral_mmd",),
            seeds=(0,),
            network=NetworkConfig(input_dim=11, fc1_width=64, fc2_width=32,
                                  dropout_rate=0.5),
            train=TrainConfig(variant="double_coral_mmd", epochs=20,
                              batch_size=64, learning_rate=1e-3,
                              discrepancy_cap=256),
        )
        report = run_matrix(spec, datasets)
        assert not report.errors, report.errors[0].message
        g = report.mean_g("ST4000DM000", "ST10000NM0086", "double_coral_mmd")
        assert g > 0.0, f"adapted g-mean {g} is not above the all-one-class 0"

        page = render_markdown(report, "ST10000NM0086", manifest_name="manifest.json")
        assert "| Source domain | ST4000DM000 |" in page
        assert f"| {g:.4f} |" in page  # four-decimal cells
        return f"double_coral_mmd g-mean {g:.4f} > 0 on real data"

    _run("real-data-smoke", 600.0, body)

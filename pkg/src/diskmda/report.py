"""Report artifacts: raw CSV, per-target markdown tables, per-pair SVG charts.

Rendering is pure string assembly over an ExperimentReport, so emitting
the same report twice produces byte-identical files. Timing columns are
left empty by default because wall-clock values would break that
guarantee; pass include_timings=True to get the measured values.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .evaluation import ExperimentReport

VARIANT_LABELS = {
    "target_only": "Target-only",
    "source_only": "Source-only",
    "single_coral": "Single-layer CORAL",
    "double_coral": "Double-layer CORAL",
    "single_mmd": "Single-layer MMD",
    "double_mmd": "Double-layer MMD",
    "single_coral_mmd": "Single-layer CORAL+MMD",
    "double_coral_mmd": "Double-layer CORAL+MMD",
}

_SEED_COLORS = ("#4878a8", "#e49444", "#5fa05a", "#c85a5a", "#8a6bbe",
                "#a87c50", "#d684b5", "#7f7f7f", "#b5ac43", "#52a3b8")

CSV_HEADER = "source,target,variant,seed,g_mean,tp,fn,fp,tn,wall_ms"


def render_csv(report: ExperimentReport, include_timings: bool = False,
               manifest_name: str = "manifest.json") -> str:
    lines = [f"# manifest: {manifest_name}", CSV_HEADER]
    for row in report.rows:
        wall = f"{row.wall_ms:.3f}" if include_timings else ""
        lines.append(
            f"{row.source},{row.target},{row.variant},{row.seed},"
            f"{row.g_mean!r},{row.tp},{row.fn},{row.fp},{row.tn},{wall}")
    return "\n".join(lines) + "\n"


def render_markdown(report: ExperimentReport, target: str,
                    manifest_name: str = "manifest.json") -> str:
    sources = report.row_sources(target)
    variants = [v for v in report.row_variants()
                if any(row.target == target and row.variant == v for row in report.rows)]
    lines = [f"# G-mean by source domain, target {target}", ""]
    lines.append("| Source domain | " + " | ".join(sources) + " |")
    lines.append("| --- |" + " --- |" * len(sources))
    lines.append("| Target domain | " + " | ".join(target for _ in sources) + " |")
    for variant in variants:
        cells = []
        for source in sources:
            rows = report.cell_rows(source, target, variant)
            cells.append(f"{np.mean([r.g_mean for r in rows]):.4f}" if rows else "-")
        lines.append(f"| {VARIANT_LABELS[variant]} | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Cell values are means over seeds, printed to 4 decimal places.")
    lines.append("")
    lines.append("Per-seed values:")
    lines.append("")
    for variant in variants:
        for source in sources:
            rows = report.cell_rows(source, target, variant)
            if not rows:
                continue
            values = ", ".join(f"{r.g_mean:.4f}" for r in rows)
            mean = float(np.mean([r.g_mean for r in rows]))
            std = float(np.std([r.g_mean for r in rows]))
            lines.append(
                f"- {VARIANT_LABELS[variant]}, source {source}: {values} "
                f"(mean {mean:.4f}, std {std:.4f})")
    lines.append("")
    lines.append(f"manifest: {manifest_name}")
    return "\n".join(lines) + "\n"


def render_svg(report: ExperimentReport, source: str, target: str,
               manifest_name: str = "manifest.json") -> str:
    """Grouped bar chart of per-seed G-mean, one group per variant."""
    variants = [v for v in report.row_variants()
                if report.cell_rows(source, target, v)]
    seeds = sorted({row.seed for row in report.rows
                    if row.source == source and row.target == target})
    n_bars = max(1, len(seeds))
    bar_w, bar_gap, group_gap = 16, 3, 26
    group_w = n_bars * bar_w + (n_bars - 1) * bar_gap
    left, top, plot_h = 56, 46, 240
    bottom = 118
    width = left + len(variants) * (group_w + group_gap) + 24
    height = top + plot_h + bottom

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<desc>G-mean per variant and seed, source {source}, target {target}; "
        f"manifest: {manifest_name}</desc>",
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left}" y="22" font-family="sans-serif" font-size="14" '
        f'fill="#222222">G-mean, source {source} to target {target}</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h - tick * plot_h
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{width - 12}" y2="{y:.1f}" '
            f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.1f}" font-family="sans-serif" '
            f'font-size="10" fill="#555555" text-anchor="end">{tick:.2f}</text>')

    x = float(left + group_gap // 2)
    for variant in variants:
        rows = report.cell_rows(source, target, variant)
        by_seed = {row.seed: row for row in rows}
        for i, seed in enumerate(seeds):
            row = by_seed.get(seed)
            if row is None:
                continue
            bx = x + i * (bar_w + bar_gap)
            bh = row.g_mean * plot_h
            by = top + plot_h - bh
            color = _SEED_COLORS[i % len(_SEED_COLORS)]
            parts.append(
                f'<rect x="{bx:.1f}" y="{by:.1f}" width="{bar_w}" height="{bh:.1f}" '
                f'fill="{color}"><title>seed {seed}: {row.g_mean:.4f}</title></rect>')
            parts.append(
                f'<text x="{bx + bar_w / 2:.1f}" y="{by - 3:.1f}" '
                f'font-family="sans-serif" font-size="8" fill="#333333" '
                f'text-anchor="middle">{row.g_mean:.4f}</text>')
        label_x = x + group_w / 2
        label_y = top + plot_h + 12
        parts.append(
            f'<text x="{label_x:.1f}" y="{label_y:.1f}" font-family="sans-serif" '
            f'font-size="10" fill="#222222" text-anchor="end" '
            f'transform="rotate(-35 {label_x:.1f} {label_y:.1f})">'
            f"{VARIANT_LABELS[variant]}</text>")
        x += group_w + group_gap

    parts.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{width - 12}" y2="{top + plot_h}" '
        f'stroke="#333333" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report_id(report: ExperimentReport) -> str:
    """Stable identifier derived from the timing-free CSV content."""
    digest = hashlib.sha256(render_csv(report, include_timings=False).encode("utf-8"))
    return digest.hexdigest()[:10]


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "md", "svg"),
                include_timings: bool = False, rid: str | None = None,
                manifest_name: str = "manifest.json") -> list[Path]:
    """Write the requested artifacts; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if rid is None:
        rid = report_id(report)
    written = []
    if "csv" in formats:
        path = out_dir / f"report_{rid}.csv"
        path.write_text(render_csv(report, include_timings, manifest_name))
        written.append(path)
    if "md" in formats:
        for target in report.row_targets():
            path = out_dir / f"{target}_{rid}.md"
            path.write_text(render_markdown(report, target, manifest_name))
            written.append(path)
    if "svg" in formats:
        for target in report.row_targets():
            for source in report.row_sources(target):
                path = out_dir / f"{target}_{source}_{rid}.svg"
                path.write_text(render_svg(report, source, target, manifest_name))
                written.append(path)
    return written

"""CSV and SVG report emission.

Reports are data plots, not pixel art: hand-assembled SVG bar charts with
fixed coordinate formatting, so identical inputs always yield identical
bytes and diffs stay readable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .consensus import ALL_FUNCTIONS
from .metrics import EvaluationReport
from .types import ConsensusResult, FeatureCatalog, GroundTruth

__all__ = [
    "consensus_scores_csv_text",
    "metrics_csv_text",
    "comparison_svg_text",
    "write_report",
]

_BAR_COLOR = "#4878a8"
_EXPECTED_COLOR = "#d1495b"
_AXIS_COLOR = "#444444"

_PANEL_W = 380
_PANEL_H = 220
_GAP = 16
_COLUMNS = 3


def _ordered_functions(results: dict[str, ConsensusResult]) -> list[str]:
    ordered = [fid for fid in ALL_FUNCTIONS if fid in results]
    ordered += [fid for fid in results if fid not in ALL_FUNCTIONS]
    return ordered


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def consensus_scores_csv_text(
    results: dict[str, ConsensusResult], catalog: FeatureCatalog
) -> str:
    """Feature x function score table."""
    ordered = _ordered_functions(results)
    lines = [",".join(["feature"] + ordered)]
    for idx, name in enumerate(catalog.names):
        cells = [name] + [_fmt(float(results[fid].scores[idx])) for fid in ordered]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def metrics_csv_text(evaluation: EvaluationReport) -> str:
    """Function x metric table; failed cells stay empty with an error note."""
    lines = ["function,hit_rate,separation_distance,error"]
    for row in evaluation.functions:
        error = (row.error or "").replace(",", ";")
        lines.append(
            ",".join([row.function_id, _fmt(row.hit_rate), _fmt(row.separation_distance), error])
        )
    return "\n".join(lines) + "\n"


def _svg_text(x: float, y: float, content: str, size: int = 9, anchor: str = "middle") -> str:
    safe = content.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
        f'font-family="monospace" text-anchor="{anchor}" fill="{_AXIS_COLOR}">{safe}</text>'
    )


def _bar_panel(
    origin_x: float,
    origin_y: float,
    title: str,
    labels: list[str],
    values: list[float],
    highlight: set[int] | None = None,
) -> list[str]:
    """One bar chart panel; negative bars hang below the zero line."""
    highlight = highlight or set()
    parts = [_svg_text(origin_x + _PANEL_W / 2, origin_y + 12, title, size=11)]
    plot_x = origin_x + 10
    plot_y = origin_y + 22
    plot_w = _PANEL_W - 20
    plot_h = _PANEL_H - 56

    finite = [v for v in values if np.isfinite(v)]
    lo = min(0.0, min(finite, default=0.0))
    hi = max(0.0, max(finite, default=0.0))
    if hi == lo:
        hi = lo + 1.0
    scale = plot_h / (hi - lo)
    zero_y = plot_y + (hi - 0.0) * scale

    n = len(values)
    slot = plot_w / max(n, 1)
    bar_w = slot * 0.8
    for i, value in enumerate(values):
        if not np.isfinite(value):
            continue
        x = plot_x + i * slot + slot * 0.1
        top = plot_y + (hi - max(value, 0.0)) * scale
        height = abs(value) * scale
        color = _EXPECTED_COLOR if i in highlight else _BAR_COLOR
        parts.append(
            f'<rect x="{x:.1f}" y="{top:.1f}" width="{bar_w:.1f}" '
            f'height="{height:.1f}" fill="{color}"/>'
        )
    parts.append(
        f'<line x1="{plot_x:.1f}" y1="{zero_y:.1f}" x2="{plot_x + plot_w:.1f}" '
        f'y2="{zero_y:.1f}" stroke="{_AXIS_COLOR}" stroke-width="1"/>'
    )
    parts.append(_svg_text(plot_x, plot_y - 2, f"max {hi:.4g}", size=8, anchor="start"))
    if lo < 0.0:
        parts.append(
            _svg_text(plot_x, plot_y + plot_h + 10, f"min {lo:.4g}", size=8, anchor="start")
        )

    label_y = origin_y + _PANEL_H - 14
    step = max(1, -(-n // 24))  # label at most ~24 ticks
    for i in range(0, n, step):
        cx = plot_x + i * slot + slot / 2
        parts.append(_svg_text(cx, label_y, labels[i], size=7))
    return parts


def comparison_svg_text(
    results: dict[str, ConsensusResult],
    evaluation: EvaluationReport,
    catalog: FeatureCatalog,
    truth: GroundTruth | None = None,
) -> str:
    """Summary panels (hit rate, separation distance, per-source hit rate)
    followed by one per-feature score panel per consensus function."""
    highlight: set[int] = set()
    if truth is not None:
        highlight = {int(i) for i in truth.expected_indices(catalog)}

    panels: list[tuple[str, list[str], list[float], set[int]]] = []

    fn_rows = [r for r in evaluation.functions if r.hit_rate is not None]
    if fn_rows:
        panels.append(
            (
                "hit rate by function",
                [r.function_id for r in fn_rows],
                [r.hit_rate for r in fn_rows],
                set(),
            )
        )
        panels.append(
            (
                "separation distance (%)",
                [r.function_id for r in fn_rows],
                [
                    r.separation_distance if r.separation_distance is not None else float("nan")
                    for r in fn_rows
                ],
                set(),
            )
        )
    src_rows = [r for r in evaluation.sources if r.hit_rate is not None]
    if src_rows:
        panels.append(
            (
                "hit rate by source",
                [r.source_id for r in src_rows],
                [r.hit_rate for r in src_rows],
                set(),
            )
        )
    for fid in _ordered_functions(results):
        panels.append(
            (
                f"{fid} scores",
                list(catalog.names),
                [float(v) for v in results[fid].descending_scores],
                highlight,
            )
        )

    rows = -(-len(panels) // _COLUMNS)
    width = _COLUMNS * _PANEL_W + (_COLUMNS + 1) * _GAP
    height = rows * _PANEL_H + (rows + 1) * _GAP
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, (title, labels, values, marks) in enumerate(panels):
        col = i % _COLUMNS
        row = i // _COLUMNS
        x = _GAP + col * (_PANEL_W + _GAP)
        y = _GAP + row * (_PANEL_H + _GAP)
        parts.extend(_bar_panel(x, y, title, labels, values, marks))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(
    results: dict[str, ConsensusResult],
    evaluation: EvaluationReport,
    out_dir,
    catalog: FeatureCatalog,
    truth: GroundTruth | None = None,
) -> list[Path]:
    """Write the deterministic report file set; returns the manifest.

    Emits consensus_scores.csv (feature x function), metrics.csv (function
    x metric) and comparison.svg.  Identical inputs produce identical
    bytes.
    """
    if catalog.count == 0:  # pragma: no cover - catalog forbids this
        raise ValueError("empty feature set")
    if not evaluation.functions and not evaluation.sources:
        raise ValueError("evaluation is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = []
    scores_path = out_dir / "consensus_scores.csv"
    scores_path.write_text(
        consensus_scores_csv_text(results, catalog), encoding="utf-8", newline="\n"
    )
    manifest.append(scores_path)

    metrics_path = out_dir / "metrics.csv"
    metrics_path.write_text(metrics_csv_text(evaluation), encoding="utf-8", newline="\n")
    manifest.append(metrics_path)

    svg_path = out_dir / "comparison.svg"
    svg_path.write_text(
        comparison_svg_text(results, evaluation, catalog, truth), encoding="utf-8", newline="\n"
    )
    manifest.append(svg_path)
    return sorted(manifest)

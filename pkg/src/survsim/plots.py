"""Static SVG line charts of seed-averaged CD and CRF against failure rate."""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import AggregateRow

METRICS = {"CD": "cd_mean", "CRF": "crf_mean"}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
MARKERS = ("circle", "square", "diamond", "triangle", "circle", "square", "diamond")

W, H = 560, 380
LEFT, RIGHT, TOP, BOTTOM = 70, 130, 40, 50


def uses_log_scale(metric: str, area: str) -> bool:
    # flooding in the small area spans orders of magnitude
    return metric == "CRF" and area == "small"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _marker(kind: str, x: float, y: float, color: str) -> str:
    if kind == "square":
        return f'<rect x="{x - 3:.1f}" y="{y - 3:.1f}" width="6" height="6" fill="{color}"/>'
    if kind == "diamond":
        return (f'<polygon points="{x:.1f},{y - 4:.1f} {x + 4:.1f},{y:.1f} '
                f'{x:.1f},{y + 4:.1f} {x - 4:.1f},{y:.1f}" fill="{color}"/>')
    if kind == "triangle":
        return (f'<polygon points="{x:.1f},{y - 4:.1f} {x + 4:.1f},{y + 3:.1f} '
                f'{x - 4:.1f},{y + 3:.1f}" fill="{color}"/>')
    return f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>'


def render_chart(rows: Sequence[AggregateRow], metric: str, model: int, area: str) -> str:
    attr = METRICS[metric]
    log_y = uses_log_scale(metric, area)
    series: dict[str, list[tuple[float, float]]] = {}
    for r in sorted(rows, key=lambda r: (r.technique, r.rate)):
        series.setdefault(r.technique, []).append((100.0 * r.rate, getattr(r, attr)))

    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if not math.isnan(y)]
    x_lo, x_hi = 0.0, max(90.0, max(xs))
    if log_y:
        pos = [y for y in ys if y > 0] or [1.0]
        y_lo = 10 ** math.floor(math.log10(min(pos)))
        y_hi = 10 ** math.ceil(math.log10(max(pos)))
        if y_hi <= y_lo:
            y_hi = y_lo * 10
        y_ticks = [10 ** e for e in range(round(math.log10(y_lo)), round(math.log10(y_hi)) + 1)]
    else:
        y_ticks = _nice_ticks(min(0.0, min(ys, default=0.0)), max(ys, default=1.0))
        y_lo, y_hi = y_ticks[0], y_ticks[-1]
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0

    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x: float) -> float:
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        if log_y:
            y = max(y, y_lo)
            frac = (math.log10(y) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo))
        else:
            frac = (y - y_lo) / (y_hi - y_lo)
        return TOP + ph - frac * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{LEFT + pw / 2:.1f}" y="22" text-anchor="middle" font-size="13">'
           f'{escape(metric)}, failure model {model}, {escape(area)} area</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for t in _nice_ticks(x_lo, x_hi, 9):
        x = px(t)
        out.append(f'<line x1="{x:.1f}" y1="{TOP + ph}" x2="{x:.1f}" y2="{TOP + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in y_ticks:
        y = py(t)
        out.append(f'<line x1="{LEFT}" y1="{y:.1f}" x2="{LEFT + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">failure rate (%)</text>')
    label = metric + (" (log scale)" if log_y else "")
    out.append(f'<text transform="translate(18 {TOP + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(label)}</text>')

    for k, (tech, pts) in enumerate(series.items()):
        color, marker = COLORS[k % len(COLORS)], MARKERS[k % len(MARKERS)]
        pts = [(x, y) for x, y in pts if not math.isnan(y)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.extend(_marker(marker, px(x), py(y), color) for x, y in pts)
        ly = TOP + 14 + 18 * k
        lx = LEFT + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        out.append(_marker(marker, lx + 11, ly, color))
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(tech)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(aggregates: Sequence[AggregateRow], output_dir: str | os.PathLike) -> list[Path]:
    """Write one SVG per (metric, model, area) present in ``aggregates``."""
    if not aggregates:
        raise ValueError("no aggregate rows to plot")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"cannot write to {out}")
    cells: dict[tuple[int, str], list[AggregateRow]] = {}
    for row in aggregates:
        cells.setdefault((row.model, row.area), []).append(row)
    written = []
    for (model, area), rows in sorted(cells.items()):
        for metric in METRICS:
            path = out / f"{metric.lower()}_m{model}_{area}.svg"
            path.write_text(render_chart(rows, metric, model, area))
            written.append(path)
    return written

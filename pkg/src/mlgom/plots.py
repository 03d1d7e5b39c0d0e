"""Minimal SVG line charts of experiment results (metric vs. swept parameter)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DomainError
from .experiment import ExperimentResult

WIDTH, HEIGHT = 480, 340
MARGIN = {"left": 64, "right": 100, "top": 36, "bottom": 52}
COLORS = {"dsog": "#d62728", "sog": "#1f77b4", "sum": "#2ca02c"}
METRICS = {"rel_l1": "Relative l1 error", "rel_l2": "Relative l2 error", "accuracy": "Accuracy rate"}


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _num(v: float) -> str:
    return f"{v:.3g}"


def line_chart(series: dict[str, list[tuple[float, float]]], title: str, xlabel: str, ylabel: str) -> str:
    """Render ``{name: [(x, y), ...]}`` as an SVG document string."""
    pts = [(x, y) for s in series.values() for x, y in s if not math.isnan(y)]
    xs = [p[0] for p in pts] or [0.0]
    ys = [p[1] for p in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if y1 == y0:
        y1 = y0 + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (pw / 2 if x1 == x0 else (x - x0) / (x1 - x0) * pw)

    def sy(y):
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN["left"]}" y1="{sy(y0):.1f}" x2="{MARGIN["left"] + pw}" y2="{sy(y0):.1f}" stroke="black"/>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" y2="{MARGIN["top"] + ph}" stroke="black"/>',
    ]
    for t in sorted(set(xs)) if len(set(xs)) <= 10 else _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{_num(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{_num(t)}</text>')
        out.append(f'<line x1="{MARGIN["left"]}" y1="{sy(t):.1f}" x2="{MARGIN["left"] + pw}" y2="{sy(t):.1f}" '
                   'stroke="#ddd"/>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for i, (name, s) in enumerate(series.items()):
        color = COLORS.get(name, "#555")
        good = [(x, y) for x, y in s if not math.isnan(y)]
        if len(good) > 1:
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in good)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in good:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 14 * i + 6
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 22}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(result: ExperimentResult, out_dir) -> list[Path]:
    """Write one SVG per (experiment, metric); each line is a method's mean over reps."""
    if not result.rows:
        raise DomainError("cannot plot an empty result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for exp in dict.fromkeys(r.experiment for r in result.rows):
        sub = ExperimentResult([r for r in result.rows if r.experiment == exp])
        param = sub.rows[0].point_param
        for metric, label in METRICS.items():
            if metric == "accuracy" and all(r.k_selected is None for r in sub.rows):
                continue
            series = {}
            for m in sub.methods():
                if metric == "accuracy":
                    series[m] = [(float(p), sub.accuracy(m, p)) for p in sub.points()]
                else:
                    series[m] = [(float(p), sub.mean(metric, m, p)) for p in sub.points()]
            path = out / f"{exp}_{metric}.svg"
            path.write_text(line_chart(series, f"{exp}: {label}", param, label))
            written.append(path)
    return written

"""Plot output: a dependency-free SVG writer and an optional matplotlib figure.

The SVG has a fixed 800x600 viewBox, autoscaled axes and one polyline per
series; each vertex carries a ``<title>`` with its coordinates to 12
significant digits. Output is a pure function of the input data.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidInputError

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=30, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def read_csv_series(text: str, x_col: str | None = None, y_cols=None) -> tuple[str, list[Series]]:
    """Numeric series from CSV text.

    Defaults: ``R1_*`` against ``R2_*`` when present (region files), else
    the first numeric column against every other numeric column.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise InvalidInputError("CSV needs a header and at least one data row")
    header, body = rows[0], rows[1:]
    numeric = []
    for j, name in enumerate(header):
        try:
            [float(r[j]) for r in body]
        except (ValueError, IndexError):
            continue
        numeric.append(name)
    if len(numeric) < 2:
        raise InvalidInputError("CSV needs at least two numeric columns")
    if x_col is None:
        r1 = [c for c in numeric if c.startswith("R1_")]
        r2 = [c for c in numeric if c.startswith("R2_")]
        if r1 and r2 and not y_cols:
            x_col, y_cols = r1[0], [r2[0]]
        else:
            x_col = numeric[0]
    if y_cols is None:
        y_cols = [c for c in numeric if c != x_col]
    for c in [x_col, *y_cols]:
        if c not in numeric:
            raise InvalidInputError(f"column {c!r} missing or not numeric; numeric columns: {numeric}")
    col = {name: j for j, name in enumerate(header)}
    xs = np.array([float(r[col[x_col]]) for r in body])
    out = [Series(c, xs, np.array([float(r[col[c]]) for r in body])) for c in y_cols]
    return x_col, out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count + 1)


def _range(v: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi - lo < 1e-12:
        pad = max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def svg_plot(series: list[Series], xlabel: str, ylabel: str, title: str = "") -> str:
    if not series:
        raise InvalidInputError("nothing to plot")
    allx = np.concatenate([s.x for s in series])
    ally = np.concatenate([s.y for s in series])
    x0, x1 = _range(allx)
    y0, y1 = _range(ally)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        X = _fmt(sx(t))
        out.append(f'<line x1="{X}" y1="{top + ph}" x2="{X}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{top + ph + 20}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = _fmt(sy(t))
        out.append(f'<line x1="{left - 5}" y1="{Y}" x2="{left}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2})">{escape(ylabel)}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(s.x, s.y))
        out.append(f'<g class="series"><title>{escape(s.label)}</title>')
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for a, b in zip(s.x, s.y):
            out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="2" fill="{color}">'
                       f'<title>({a:.12g}, {b:.12g})</title></circle>')
        out.append("</g>")
        out.append(f'<text x="{left + pw - 10}" y="{top + 18 + 16 * i}" text-anchor="end" '
                   f'fill="{color}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_figure(series: list[Series], xlabel: str, ylabel: str, path, title: str = "") -> None:
    """Write the same plot through matplotlib (format from the file suffix)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for s in series:
        ax.plot(s.x, s.y, marker=".", markersize=3, linewidth=1.2, label=s.label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    # drop timestamps so repeated renders are identical
    suffix = str(path).rsplit(".", 1)[-1].lower()
    meta = {"svg": {"Date": None}, "pdf": {"CreationDate": None}, "png": {"Software": None}}.get(suffix)
    with matplotlib.rc_context({"svg.hashsalt": "dbcfstar"}):
        fig.savefig(path, metadata=meta)
    plt.close(fig)

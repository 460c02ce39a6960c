"""Minimal self-contained SVG emission for line plots and heatmaps.

No plotting dependency: figures are assembled from primitive elements.
Line plots render one polyline per series (axes use line elements);
heatmaps render one rect per cell, with infeasible cells in grey.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import IoError

__all__ = ["emit_svg"]

_MARGIN = 50.0
_WIDTH = 640.0
_HEIGHT = 480.0
_GREY = "#bdbdbd"


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _color(frac: float) -> str:
    """Two-stop blue-to-yellow ramp on [0, 1]."""
    frac = min(max(frac, 0.0), 1.0)
    r = int(round(40 + frac * (253 - 40)))
    g = int(round(60 + frac * (231 - 60)))
    b = int(round(134 + frac * (37 - 134)))
    return f"#{r:02x}{g:02x}{b:02x}"


def _line_svg(data: dict) -> str:
    series = data["series"]
    log_y = bool(data.get("log_y", False))
    title = data.get("title", "")
    xs_all = [float(x) for s in series for x in s["x"]]
    ys_all = [float(y) for s in series for y in s["y"]]
    if not xs_all:
        raise IoError("line plot needs at least one point")
    if log_y:
        ys_all = [y for y in ys_all if y > 0.0]
        if not ys_all:
            raise IoError("log-scale line plot needs positive values")
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if log_y:
        y0, y1 = math.log10(y0), math.log10(y1)
    if y1 == y0:
        y1 = y0 + 1.0
    iw = _WIDTH - 2 * _MARGIN
    ih = _HEIGHT - 2 * _MARGIN

    def px(x):
        return _MARGIN + (float(x) - x0) / (x1 - x0) * iw

    def py(y):
        y = float(y)
        if log_y:
            y = math.log10(y) if y > 0 else y0
        return _HEIGHT - _MARGIN - (y - y0) / (y1 - y0) * ih

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}">',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(title)}</text>'
        )
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    for i, s in enumerate(series):
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(s["x"], s["y"])
            if not log_y or float(y) > 0.0
        )
        color = palette[i % len(palette)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        label = s.get("label")
        if label:
            parts.append(
                f'<text x="{_WIDTH - _MARGIN + 4}" y="{_MARGIN + 16 * i + 10}" '
                f'font-family="sans-serif" font-size="11" fill="{color}" '
                f'text-anchor="start">{_esc(label)}</text>'
            )
    parts.append(
        f'<text x="{_MARGIN}" y="{_HEIGHT - _MARGIN + 24}" font-family="sans-serif" '
        f'font-size="11">{_esc(data.get("x_label", ""))}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def _heatmap_svg(data: dict) -> str:
    values = np.asarray(data["values"], dtype=float)
    if values.size == 0:
        raise IoError("heatmap needs a nonempty value grid")
    n1, n2 = values.shape
    finite = np.isfinite(values)
    log_scale = bool(data.get("log_values", True)) and np.any(finite)
    if np.any(finite):
        vals = values[finite]
        lo, hi = float(vals.min()), float(vals.max())
        if log_scale and lo > 0.0:
            lo, hi = math.log10(lo), math.log10(hi)
        else:
            log_scale = False
        if hi == lo:
            hi = lo + 1.0
    iw = _WIDTH - 2 * _MARGIN
    ih = _HEIGHT - 2 * _MARGIN
    cw = iw / n1
    ch = ih / n2
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}">'
    ]
    title = data.get("title", "")
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(title)}</text>'
        )
    for i1 in range(n1):
        for i2 in range(n2):
            x = _MARGIN + i1 * cw
            y = _HEIGHT - _MARGIN - (i2 + 1) * ch
            if finite[i1, i2]:
                v = values[i1, i2]
                if log_scale:
                    v = math.log10(v) if v > 0 else lo
                fill = _color((v - lo) / (hi - lo))
            else:
                fill = _GREY
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.5:.2f}" '
                f'height="{ch + 0.5:.2f}" fill="{fill}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_svg(kind: str, data: dict, path) -> None:
    """Write a self-contained SVG file.

    ``kind`` is "line" (data: series=[{x, y, label?}], log_y?, title?) or
    "heatmap" (data: values 2-d array with +inf/NaN for infeasible cells,
    log_values?, title?).
    """
    if kind == "line":
        text = _line_svg(data)
    elif kind == "heatmap":
        text = _heatmap_svg(data)
    else:
        raise IoError(f"unknown SVG kind {kind!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"could not write {path}: {exc}") from exc

"""Minimal SVG emission for line plots and histograms.

Plots are drawn with bare polyline/rect/text primitives so report files
have no renderer dependency and are byte-deterministic for fixed inputs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot", "histogram"]

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 16, 32, 44
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0.0:
        span = 1.0
    return out_lo + (np.asarray(vals, dtype=float) - lo) * (out_hi - out_lo) / span


def _frame(title: str, xlabel: str, ylabel: str, x_lo, x_hi, y_lo, y_hi):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#444444" stroke-width="1"/>',
        f'<text x="{_W // 2}" y="20" text-anchor="middle" font-family="monospace" '
        f'font-size="14">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 8}" text-anchor="middle" font-family="monospace" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H // 2}" text-anchor="middle" font-family="monospace" '
        f'font-size="12" transform="rotate(-90 14 {_H // 2})">{ylabel}</text>',
        f'<text x="{_ML}" y="{_H - _MB + 16}" text-anchor="middle" font-family="monospace" '
        f'font-size="10">{_fmt(x_lo)}</text>',
        f'<text x="{_W - _MR}" y="{_H - _MB + 16}" text-anchor="middle" '
        f'font-family="monospace" font-size="10">{_fmt(x_hi)}</text>',
        f'<text x="{_ML - 4}" y="{_H - _MB}" text-anchor="end" font-family="monospace" '
        f'font-size="10">{_fmt(y_lo)}</text>',
        f'<text x="{_ML - 4}" y="{_MT + 10}" text-anchor="end" font-family="monospace" '
        f'font-size="10">{_fmt(y_hi)}</text>',
    ]
    return parts


def line_plot(path, x, series, title="", xlabel="", ylabel="", logy=False) -> None:
    """Write a polyline plot; ``series`` is a list of (label, values) pairs."""
    x = np.asarray(x, dtype=float)
    cleaned = []
    for label, ys in series:
        ys = np.asarray(ys, dtype=float)
        if logy:
            ys = np.log10(np.maximum(np.abs(ys), 1e-300))
        cleaned.append((label, ys))
    y_all = np.concatenate([ys for _, ys in cleaned]) if cleaned else np.zeros(1)
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo, y_hi = float(np.min(y_all)), float(np.max(y_all))
    parts = _frame(title, xlabel, ("log10 " if logy else "") + ylabel, x_lo, x_hi, y_lo, y_hi)
    for idx, (label, ys) in enumerate(cleaned):
        px = _scale(x, x_lo, x_hi, _ML, _W - _MR)
        py = _scale(ys, y_lo, y_hi, _H - _MB, _MT)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        color = _COLORS[idx % len(_COLORS)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 4}" y="{_MT + 14 + 14 * idx}" text-anchor="end" '
            f'font-family="monospace" font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def histogram(path, values, bins=10, title="", xlabel="", ylabel="count") -> None:
    """Write a bar histogram of the given values."""
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    x_lo, x_hi = float(edges[0]), float(edges[-1])
    y_hi = float(max(counts.max(), 1))
    parts = _frame(title, xlabel, ylabel, x_lo, x_hi, 0.0, y_hi)
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        px0 = float(_scale([lo], x_lo, x_hi, _ML, _W - _MR)[0])
        px1 = float(_scale([hi], x_lo, x_hi, _ML, _W - _MR)[0])
        py = float(_scale([c], 0.0, y_hi, _H - _MB, _MT)[0])
        parts.append(
            f'<rect x="{_fmt(px0)}" y="{_fmt(py)}" width="{_fmt(max(px1 - px0 - 1, 1))}" '
            f'height="{_fmt(_H - _MB - py)}" fill="#1f77b4" stroke="#444444" stroke-width="0.5"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")

"""Minimal deterministic SVG line and histogram plots.

The CSV files are the authoritative outputs; these pictures are for a quick
look and are written with fixed formatting so reruns are byte-identical.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")


def _scale(lo: float, hi: float, a: float, b: float):
    if not hi > lo:
        hi = lo + 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) * (b - a) / (hi - lo)


def _frame(title: str, xlabel: str, ylabel: str, xr, yr) -> list[str]:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN // 2, MARGIN // 2
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{y1 - 6}" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT // 2})">{_esc(ylabel)}</text>',
        f'<text x="{x0}" y="{y0 + 15}" font-size="10">{xr[0]:.4g}</text>',
        f'<text x="{x1}" y="{y0 + 15}" text-anchor="end" font-size="10">{xr[1]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y0}" text-anchor="end" font-size="10">{yr[0]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y1 + 10}" text-anchor="end" font-size="10">{yr[1]:.4g}</text>',
    ]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ranges(xs, ys):
    xa = np.concatenate([np.ravel(x) for x in xs])
    ya = np.concatenate([np.ravel(y) for y in ys])
    xa, ya = xa[np.isfinite(xa)], ya[np.isfinite(ya)]
    xr = (float(xa.min()), float(xa.max())) if xa.size else (0.0, 1.0)
    yr = (float(ya.min()), float(ya.max())) if ya.size else (0.0, 1.0)
    return xr, yr


def _legend(labels: Sequence[str]) -> list[str]:
    out = []
    for k, lab in enumerate(labels):
        if not lab:
            continue
        y = MARGIN // 2 + 14 + 14 * k
        out.append(f'<text x="{WIDTH - MARGIN // 2 - 4}" y="{y}" text-anchor="end" font-size="11" '
                   f'fill="{PALETTE[k % len(PALETTE)]}">{_esc(lab)}</text>')
    return out


def line_plot(path: str | Path, series: Sequence[tuple], *, title: str = "", xlabel: str = "",
              ylabel: str = "") -> None:
    """``series`` holds ``(x, y, label)`` triples; ``y`` may be 2-D (one line per column, one colour)."""
    xs = [s[0] for s in series]
    ys = [s[1] for s in series]
    xr, yr = _ranges(xs, ys)
    sx = _scale(*xr, MARGIN, WIDTH - MARGIN // 2)
    sy = _scale(*yr, HEIGHT - MARGIN, MARGIN // 2)
    body = _frame(title, xlabel, ylabel, xr, yr)
    for k, (x, y, _label) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        y = np.asarray(y, dtype=float)
        cols = y.reshape(y.shape[0], -1)
        px = sx(x)
        for j in range(cols.shape[1]):
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, sy(cols[:, j])))
            body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1" points="{pts}"/>')
    body += _legend([s[2] for s in series])
    body.append("</svg>")
    Path(path).write_text("\n".join(body) + "\n")


def histogram(path: str | Path, edges: Sequence[np.ndarray], densities: Sequence[np.ndarray], *,
              overlays: Sequence[tuple] = (), labels: Sequence[str] = (), title: str = "",
              xlabel: str = "", ylabel: str = "density") -> None:
    """Step histograms (one per population) with optional ``(x, y)`` overlay curves."""
    xs = list(edges) + [o[0] for o in overlays]
    ys = list(densities) + [o[1] for o in overlays] + [np.zeros(1)]
    xr, yr = _ranges(xs, ys)
    sx = _scale(*xr, MARGIN, WIDTH - MARGIN // 2)
    sy = _scale(*yr, HEIGHT - MARGIN, MARGIN // 2)
    body = _frame(title, xlabel, ylabel, xr, yr)
    for k, (e, d) in enumerate(zip(edges, densities)):
        colour = PALETTE[k % len(PALETTE)]
        px = sx(np.repeat(e, 2))
        py = sy(np.concatenate([[0.0], np.repeat(d, 2), [0.0]]))
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-dasharray="3,2" points="{pts}"/>')
    for k, (x, y) in enumerate(overlays):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(x), sy(y)))
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
    body += _legend(list(labels))
    body.append("</svg>")
    Path(path).write_text("\n".join(body) + "\n")

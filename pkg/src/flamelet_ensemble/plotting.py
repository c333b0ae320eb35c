"""Minimal SVG line charts: one panel per series group, optional shaded band."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass
class Panel:
    title: str
    x: np.ndarray
    lines: list[tuple[str, np.ndarray]] = field(default_factory=list)
    band: tuple[np.ndarray, np.ndarray] | None = None
    xlabel: str = ""


def _ticks(lo: float, hi: float, n: int = 4) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


def _fmt_tick(v: float) -> str:
    if v == 0 or 1e-3 <= abs(v) < 1e4:
        return f"{v:.3g}"
    return f"{v:.2e}"


def _panel_svg(panel: Panel, ox: float, oy: float, w: float, h: float) -> list[str]:
    pad_l, pad_r, pad_t, pad_b = 62.0, 10.0, 22.0, 30.0
    pw, ph = w - pad_l - pad_r, h - pad_t - pad_b
    x = np.asarray(panel.x, dtype=float)
    ys = [np.asarray(y, dtype=float) for _, y in panel.lines]
    if panel.band is not None:
        ys += [np.asarray(b, dtype=float) for b in panel.band]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if yhi == ylo:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    xlo, xhi = float(x.min()), float(x.max())
    if xhi == xlo:
        xhi = xlo + 1.0

    def sx(v):
        return ox + pad_l + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return oy + pad_t + (1.0 - (v - ylo) / (yhi - ylo)) * ph

    out = [f'<rect x="{ox + pad_l:.2f}" y="{oy + pad_t:.2f}" width="{pw:.2f}" height="{ph:.2f}" '
           'fill="none" stroke="#888"/>',
           f'<text x="{ox + pad_l + pw / 2:.2f}" y="{oy + 15:.2f}" text-anchor="middle" '
           f'font-size="12">{escape(panel.title)}</text>']
    for t in _ticks(ylo, yhi):
        out.append(f'<text x="{ox + pad_l - 4:.2f}" y="{sy(t) + 3:.2f}" text-anchor="end" '
                   f'font-size="9">{_fmt_tick(t)}</text>')
    for t in _ticks(xlo, xhi):
        out.append(f'<text x="{sx(t):.2f}" y="{oy + pad_t + ph + 12:.2f}" text-anchor="middle" '
                   f'font-size="9">{_fmt_tick(t)}</text>')
    if panel.xlabel:
        out.append(f'<text x="{ox + pad_l + pw / 2:.2f}" y="{oy + h - 4:.2f}" text-anchor="middle" '
                   f'font-size="10">{escape(panel.xlabel)}</text>')
    if panel.band is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in panel.band)
        pts = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, hi)]
        pts += [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::-1], lo[::-1])]
        out.append(f'<polygon points="{" ".join(pts)}" fill="#d62728" fill-opacity="0.2" stroke="none"/>')
    for i, (name, y) in enumerate(panel.lines):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, np.asarray(y, dtype=float))
                       if math.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[i % len(PALETTE)]}" '
                   f'stroke-width="1.2"><title>{escape(name)}</title></polyline>')
    return out


def render_svg(panels: list[Panel], columns: int = 4, panel_size=(300.0, 220.0), legend=None) -> str:
    """Lay panels out on a grid; ``legend`` names the line styles in order."""
    w, h = panel_size
    rows = max(1, math.ceil(len(panels) / columns))
    legend_h = 20.0 if legend else 0.0
    width, height = columns * w, rows * h + legend_h
    body = []
    for i, panel in enumerate(panels):
        body += _panel_svg(panel, (i % columns) * w, (i // columns) * h, w, h)
    if legend:
        for i, name in enumerate(legend):
            lx, ly = 10 + i * 140, rows * h + 14
            body.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                        f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="2"/>')
            body.append(f'<text x="{lx + 24}" y="{ly}" font-size="11">{escape(name)}</text>')
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif">\n'
            + "\n".join(body) + "\n</svg>\n")

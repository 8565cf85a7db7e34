"""Minimal standalone SVG line plots (no external resources, fixed viewBox)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=70, right=170, top=40, bottom=55)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def line_plot(series, xlabel: str, ylabel: str, title: str, logx: bool = False, logy: bool = False, annotations=()):
    """``series``: list of ``(label, x, y, style)`` with style in {"line", "dash", "marker"}."""
    tx = (lambda v: np.log10(v)) if logx else (lambda v: np.asarray(v, dtype=float))
    ty = (lambda v: np.log10(v)) if logy else (lambda v: np.asarray(v, dtype=float))
    xs = np.concatenate([tx(np.asarray(s[1], dtype=float)) for s in series])
    ys = np.concatenate([ty(np.asarray(s[2], dtype=float)) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0 or 1.0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        label = f"1e{v:g}" if logx else f"{v:g}"
        out.append(f'<line x1="{_fmt(px(v))}" y1="{MARGIN["top"] + ph}" x2="{_fmt(px(v))}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(v))}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{label}</text>')
    for v in _ticks(y0, y1):
        label = f"1e{v:g}" if logy else f"{v:g}"
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_fmt(py(v))}" x2="{MARGIN["left"]}" y2="{_fmt(py(v))}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    out.append(f'<clipPath id="plot"><rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}"/></clipPath>')
    for k, (label, x, y, style) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        X, Y = tx(np.asarray(x, dtype=float)), ty(np.asarray(y, dtype=float))
        good = np.isfinite(X) & np.isfinite(Y)
        if style == "marker":
            step = max(1, int(good.sum() // 60))
            pts = [(px(a), py(b)) for a, b in list(zip(X[good], Y[good]))[::step]]
            out.append(f'<g clip-path="url(#plot)" fill="none" stroke="{color}">')
            out.extend(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="3"/>' for a, b in pts)
            out.append("</g>")
        else:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(X[good], Y[good]))
            dash = ' stroke-dasharray="6 4"' if style == "dash" else ""
            out.append(
                f'<polyline clip-path="url(#plot)" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>'
            )
        ly = MARGIN["top"] + 16 + 18 * k
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(label)}</text>')
    for k, text in enumerate(annotations):
        out.append(f'<text x="{MARGIN["left"] + 10}" y="{MARGIN["top"] + 18 + 16 * k}">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

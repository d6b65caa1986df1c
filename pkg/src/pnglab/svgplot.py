"""Minimal hand-written SVG line and scatter plots."""
from __future__ import annotations

import math
from html import escape

import numpy as np

COLORS = ("#16c", "#c33", "#393", "#a6c", "#555")


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def plot(series, *, title="", xlabel="", ylabel="", logx=False, logy=False, width=520, height=360):
    """``series``: iterable of ``(label, xs, ys, style)`` with style ``line``, ``step`` or ``dots``."""
    fx = np.log10 if logx else (lambda v: np.asarray(v, float))
    fy = np.log10 if logy else (lambda v: np.asarray(v, float))
    prepared = []
    for label, xs, ys, style in series:
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            ok &= xs > 0
        if logy:
            ok &= ys > 0
        prepared.append((label, fx(xs[ok]), fy(ys[ok]), style))
    allx = np.concatenate([p[1] for p in prepared]) if prepared else np.array([0.0, 1.0])
    ally = np.concatenate([p[2] for p in prepared]) if prepared else np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _ticks(x0, x1):
        lab = f"{10 ** v:.3g}" if logx else f"{v:.3g}"
        out.append(f'<text x="{sx(v):.1f}" y="{mt + ph + 15}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1):
        lab = f"{10 ** v:.3g}" if logy else f"{v:.3g}"
        out.append(f'<text x="{ml - 5}" y="{sy(v) + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for k, (label, xs, ys, style) in enumerate(prepared):
        col = COLORS[k % len(COLORS)]
        if style == "dots":
            out += [f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="2.5" fill="{col}"/>' for a, b in zip(xs, ys)]
        else:
            pts = []
            for i, (a, b) in enumerate(zip(xs, ys)):
                if style == "step" and i:
                    pts.append(f"{sx(a):.1f},{sy(ys[i - 1]):.1f}")
                pts.append(f"{sx(a):.1f},{sy(b):.1f}")
            out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        out.append(f'<text x="{ml + 8}" y="{mt + 14 + 13 * k}" fill="{col}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def ecdf_overlay(samples, cdf, title="empirical CDF"):
    x = np.sort(np.asarray(samples, float))
    emp = np.arange(1, x.size + 1) / x.size
    grid = np.linspace(x.min(), x.max(), 200)
    return plot([("empirical", x, emp, "step"), ("limit", grid, [cdf(v) for v in grid], "line")],
                title=title, xlabel="r", ylabel="P(X_t/t <= r)")


def loglog_fit(scales, dispersions, slope, title="dispersion"):
    s = np.asarray(scales, float)
    d = np.asarray(dispersions, float)
    c = math.exp(np.mean(np.log(d) - slope * np.log(s)))
    return plot([("measured", s, d, "dots"), (f"fit slope {slope:.3f}", s, c * s ** slope, "line")],
                title=title, xlabel="scale", ylabel="standard deviation", logx=True, logy=True)

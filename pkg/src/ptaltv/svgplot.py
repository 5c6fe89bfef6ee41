"""Minimal deterministic SVG line plots."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _transform(y: np.ndarray, scale: str) -> np.ndarray:
    if scale == "linear":
        return y
    if scale == "log":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y > 0, np.log10(y), np.nan)
    if scale == "symlog":
        return np.sign(y) * np.log10(1.0 + np.abs(y))
    raise ValueError(f"unknown scale {scale!r}")


def _inverse_label(v: float, scale: str) -> str:
    if scale == "linear":
        return f"{v:.4g}"
    if scale == "log":
        return f"1e{v:.0f}" if abs(v - round(v)) < 1e-9 else f"{10 ** v:.3g}"
    y = math.copysign(10 ** abs(v) - 1.0, v)
    return f"{y:.3g}"


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], *,
              title: str = "", xlabel: str = "", ylabel: str = "", yscale: str = "linear",
              vlines: Sequence[tuple[float, str]] = (), width: int = 720, height: int = 440) -> str:
    """Render labelled (x, y) series as an SVG document string.

    ``yscale`` is "linear", "log" or "symlog" (sign(y) log10(1 + |y|)).
    Non-finite points break the polyline.
    """
    left, right, top, bottom = 80, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom
    data = []
    for label, xs, ys in series:
        x = np.asarray(xs, dtype=float)
        y = _transform(np.asarray(ys, dtype=float), yscale)
        data.append((label, x, y))
    allx = np.concatenate([d[1] for d in data])
    ally = np.concatenate([d[2] for d in data])
    ally = ally[np.isfinite(ally)]
    x0, x1 = float(np.nanmin(allx)), float(np.nanmax(allx))
    y0, y1 = (float(ally.min()), float(ally.max())) if ally.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{py(t):.2f}" x2="{left + pw}" y2="{py(t):.2f}" '
                   f'stroke="#dddddd" stroke-width="0.5"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">'
                   f'{escape(_inverse_label(t, yscale))}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{left}" y1="{py(0):.2f}" x2="{left + pw}" y2="{py(0):.2f}" '
                   f'stroke="black" stroke-width="0.8"/>')
    for xv, label in vlines:
        out.append(f'<line x1="{px(xv):.2f}" y1="{top}" x2="{px(xv):.2f}" y2="{top + ph}" '
                   f'stroke="gray" stroke-dasharray="4,3"/>')
        out.append(f'<text x="{px(xv) - 4:.2f}" y="{top + 14}" text-anchor="end" fill="gray">'
                   f'{escape(label)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, x, y) in enumerate(data):
        color = PALETTE[i % len(PALETTE)]
        segments, cur = [], []
        for xv, yv in zip(x, y):
            if math.isfinite(xv) and math.isfinite(yv):
                cur.append(f"{px(xv):.2f},{py(yv):.2f}")
            elif cur:
                segments.append(cur)
                cur = []
        if cur:
            segments.append(cur)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = top + 10 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 42}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

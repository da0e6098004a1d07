"""Bare-bones SVG line plots. Output is deterministic for identical input."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 55


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(series: dict, title: str, xlabel: str, ylabel: str, logy: bool = False) -> str:
    """``series`` maps label -> (x values, y values). Returns SVG text."""
    pts = {}
    for label, (xs, ys) in series.items():
        clean = [(float(x), float(y)) for x, y in zip(xs, ys)
                 if math.isfinite(x) and math.isfinite(y) and (not logy or y > 0)]
        pts[label] = [(x, math.log10(y) if logy else y) for x, y in clean]
    allx = [p[0] for v in pts.values() for p in v] or [0.0, 1.0]
    ally = [p[1] for v in pts.values() for p in v] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return ML + (x - x0) / (x1 - x0) * (W - ML - MR)

    def sy(y):
        return H - MB - (y - y0) / (y1 - y0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
           f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{H - MB + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        lab = f"1e{t:g}" if logy else f"{t:g}"
        out.append(f'<text x="{ML - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {H / 2:.1f})">'
               f'{escape(ylabel)}</text>')
    for i, (label, p) in enumerate(pts.items()):
        c = COLORS[i % len(COLORS)]
        if p:
            d = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in p)
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{d}"/>')
        out.append(f'<text x="{W - MR - 4}" y="{MT + 14 * (i + 1)}" text-anchor="end" fill="{c}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_plot(labels: Sequence, groups: dict, title: str, ylabel: str) -> str:
    """Grouped bars; ``groups`` maps group name -> values aligned with ``labels``."""
    ymax = max([max(v) for v in groups.values()] + [1e-12])
    nb = len(labels)
    ng = max(len(groups), 1)
    slot = (W - ML - MR) / max(nb, 1)
    bw = slot * 0.8 / ng
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
           f'<text x="16" y="{H / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {H / 2:.1f})">'
           f'{escape(ylabel)}</text>']
    for t in _ticks(0.0, ymax):
        y = H - MB - t / ymax * (H - MT - MB)
        out.append(f'<text x="{ML - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    for i, lab in enumerate(labels):
        out.append(f'<text x="{ML + slot * (i + 0.5):.1f}" y="{H - MB + 16}" text-anchor="middle">{escape(str(lab))}</text>')
    for g, (name, vals) in enumerate(groups.items()):
        c = COLORS[g % len(COLORS)]
        for i, v in enumerate(vals):
            h = max(v, 0.0) / ymax * (H - MT - MB)
            x = ML + slot * i + slot * 0.1 + g * bw
            out.append(f'<rect x="{x:.2f}" y="{H - MB - h:.2f}" width="{bw:.2f}" height="{h:.2f}" fill="{c}"/>')
        out.append(f'<text x="{W - MR - 4}" y="{MT + 14 * (g + 1)}" text-anchor="end" fill="{c}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Tiny deterministic SVG line/scatter plots (no plotting dependency).

Output is a pure function of the data arrays: no timestamps, random ids or
environment-dependent content, so re-rendering from the same CSV data
reproduces the file byte for byte.
"""

from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT = 860, 520
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 34, 48
PALETTE = ("#1f6fb4", "#d95f02", "#2ca05a", "#7b52ab", "#c23b80", "#6b6b6b")


def _ticks(lo: float, hi: float, count: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi) or lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / count))
    for mult in (1, 2, 2.5, 5, 10):
        if span / (step * mult) <= count:
            step = step * mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.xlim, self.ylim = xlim, ylim
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        self._frame(title, xlabel, ylabel)

    def px(self, x):
        lo, hi = self.xlim
        return MARGIN_L + (x - lo) / (hi - lo) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y):
        lo, hi = self.ylim
        return HEIGHT - MARGIN_B - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    def _frame(self, title, xlabel, ylabel):
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = MARGIN_T, HEIGHT - MARGIN_B
        self.parts.append(
            f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
            'fill="none" stroke="#333" stroke-width="1"/>'
        )
        for t in _ticks(*self.xlim):
            px = self.px(t)
            self.parts.append(
                f'<line x1="{px:.2f}" y1="{y1}" x2="{px:.2f}" y2="{y1 + 5}" stroke="#333"/>'
                f'<text x="{px:.2f}" y="{y1 + 18}" font-size="11" text-anchor="middle" '
                f'font-family="sans-serif">{t:.6g}</text>'
            )
        for t in _ticks(*self.ylim):
            py = self.py(t)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="#333"/>'
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" font-size="11" text-anchor="end" '
                f'font-family="sans-serif">{t:.6g}</text>'
            )
        self.parts.append(
            f'<text x="{(x0 + x1) / 2:.1f}" y="20" font-size="14" text-anchor="middle" '
            f'font-family="sans-serif">{title}</text>'
            f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 10}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>'
            f'<text x="16" y="{(y0 + y1) / 2:.1f}" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif" transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{ylabel}</text>'
        )

    def legend(self, labels):
        x = MARGIN_L + 12
        y = MARGIN_T + 16
        for i, label in enumerate(labels):
            color = PALETTE[i % len(PALETTE)]
            self.parts.append(
                f'<line x1="{x}" y1="{y - 4}" x2="{x + 22}" y2="{y - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
                f'<text x="{x + 28}" y="{y}" font-size="12" font-family="sans-serif">{label}</text>'
            )
            y += 17

    def finish(self) -> str:
        return "".join(self.parts) + "</svg>"


def _limits(arrays, pad=0.04):
    data = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    data = data[np.isfinite(data)]
    lo, hi = (0.0, 1.0) if data.size == 0 else (data.min(), data.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def line_plot(path, series, title="", xlabel="", ylabel=""):
    """series: list of (x, y, label) triples drawn as polylines."""
    xs = [s[0] for s in series]
    ys = [s[1] for s in series]
    canvas = _Canvas(_limits(xs), _limits(ys), title, xlabel, ylabel)
    for i, (x, y, _) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{canvas.px(float(a)):.2f},{canvas.py(float(b)):.2f}" for a, b in zip(x, y)
        )
        canvas.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
    canvas.legend([s[2] for s in series if s[2]])
    svg = canvas.finish()
    with open(path, "w") as fh:
        fh.write(svg)
    return svg


def scatter_plot(path, x, y, color_phase=None, title="", xlabel="", ylabel=""):
    """Scatter with optional per-point hue given by a phase in degrees."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    canvas = _Canvas(_limits([x]), _limits([y]), title, xlabel, ylabel)
    for i in range(x.size):
        if color_phase is None:
            fill = PALETTE[0]
        else:
            fill = f"hsl({float(color_phase[i]) % 360.0:.1f},75%,45%)"
        canvas.parts.append(
            f'<circle cx="{canvas.px(x[i]):.2f}" cy="{canvas.py(y[i]):.2f}" r="3.5" '
            f'fill="{fill}" fill-opacity="0.65"/>'
        )
    svg = canvas.finish()
    with open(path, "w") as fh:
        fh.write(svg)
    return svg

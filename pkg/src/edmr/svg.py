"""Minimal self-contained SVG plots (line plots and heatmaps) for experiment results."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import UsageError
from .experiments import SweepResult

__all__ = ["PLOT_KINDS", "emit_plot"]

PLOT_KINDS = ("line", "contour")

_W, _H = 640, 420
_MAX_ROWS = 160
_M = dict(left=80, right=20, top=30, bottom=55)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [v for v in np.arange(start, hi + step * 1e-9, step)]


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1.0, self.y1 + 1.0
        self.pw = _W - _M["left"] - _M["right"]
        self.ph = _H - _M["top"] - _M["bottom"]

    def px(self, x):
        return _M["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return _M["top"] + (1 - (np.asarray(y) - self.y0) / (self.y1 - self.y0)) * self.ph

    def axes(self, xlabel, ylabel):
        out = [f'<rect x="{_M["left"]}" y="{_M["top"]}" width="{self.pw}" height="{self.ph}" '
               'fill="none" stroke="black"/>']
        for t in _ticks(self.x0, self.x1):
            x = float(self.px(t))
            out.append(f'<line x1="{x:.2f}" y1="{_M["top"] + self.ph}" x2="{x:.2f}" '
                       f'y2="{_M["top"] + self.ph + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{_M["top"] + self.ph + 18}" font-size="11" '
                       f'text-anchor="middle">{t:.4g}</text>')
        for t in _ticks(self.y0, self.y1):
            y = float(self.py(t))
            out.append(f'<line x1="{_M["left"] - 5}" y1="{y:.2f}" x2="{_M["left"]}" y2="{y:.2f}" '
                       'stroke="black"/>')
            out.append(f'<text x="{_M["left"] - 8}" y="{y + 4:.2f}" font-size="11" '
                       f'text-anchor="end">{t:.3g}</text>')
        out.append(f'<text x="{_M["left"] + self.pw / 2}" y="{_H - 15}" font-size="13" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{_M["top"] + self.ph / 2}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 18 {_M["top"] + self.ph / 2})">{escape(ylabel)}</text>')
        return out


def _polyline(fr, x, y, colour, width=1.5):
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(fr.px(x), fr.py(y)))
    return f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="{width}"/>'


def _document(body, title):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">')
    t = f'<text x="{_W / 2}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>'
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', t, *body, "</svg>"]) + "\n"


def _line_plot(result: SweepResult) -> str:
    x = result.axis
    ys = [(result.observable_name, result.values, "black")]
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    for k, (name, col) in enumerate(result.columns.items()):
        ys.append((name, np.asarray(col, float), palette[k % len(palette)]))
    if result.values.ndim != 1:
        raise UsageError("line plot needs a one-dimensional observable")
    allv = np.concatenate([y for _, y, _ in ys])
    pad = 0.05 * (allv.max() - allv.min() or 1.0)
    fr = _Frame((x.min(), x.max()), (allv.min() - pad, allv.max() + pad))
    body = fr.axes(result.axis_name, result.observable_name)
    for k, (name, y, colour) in enumerate(ys):
        body.append(_polyline(fr, x, y, colour, 2.0 if k == 0 else 1.0))
        body.append(f'<text x="{_W - _M["right"] - 6}" y="{_M["top"] + 16 + 14 * k}" font-size="11" '
                    f'text-anchor="end" fill="{colour}">{escape(name)}</text>')
    for p in result.meta.get("peaks", []):
        px, py = float(fr.px(p["B0_mT"])), float(fr.py(p["dI_A"]))
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3.5" fill="red"/>')
        body.append(f'<text x="{px:.2f}" y="{py - 8:.2f}" font-size="11" text-anchor="middle">'
                    f'{p["B0_mT"]:.1f} mT</text>')
    return _document(body, result.observable_name + " vs " + result.axis_name)


def _colour(v):
    # white -> blue -> dark red ramp over [0, 1]
    v = min(max(float(v), 0.0), 1.0)
    stops = [(0.0, (255, 255, 255)), (0.5, (49, 130, 189)), (1.0, (165, 15, 21))]
    for (a, ca), (b, cb) in zip(stops, stops[1:]):
        if v <= b:
            f = (v - a) / (b - a)
            r, g, bl = (round(ca[i] + f * (cb[i] - ca[i])) for i in range(3))
            return f"#{r:02x}{g:02x}{bl:02x}"
    return "#a50f15"


def _contour_plot(result: SweepResult) -> str:
    if "freqs_Hz" in result.meta:
        z = np.asarray(result.values, float)
        yaxis = np.asarray(result.meta["freqs_Hz"], float) / 1e6
        ylabel = "frequency (MHz)"
        overlay = result.columns.get("predicted_Hz")
        ridge = result.columns.get("ridge_Hz")
        ymax = yaxis[-1]
        if overlay is not None:
            ymax = min(yaxis[-1], 2.5 * float(np.max(overlay)) / 1e6)
    elif "contour" in result.meta:
        z = np.asarray(result.meta["contour"], float)
        yaxis = np.asarray(result.meta["contour_times_s"], float) * 1e6
        ylabel = "t (us)"
        overlay = ridge = None
        ymax = yaxis[-1]
    else:
        raise UsageError("contour plot needs a (B0, frequency) or (B0, t) matrix")
    keep = yaxis <= ymax
    yaxis, z = yaxis[keep], z[:, keep]
    stride = max(1, math.ceil(len(yaxis) / _MAX_ROWS))
    if stride > 1:
        # keep the strongest value of each block so narrow ridges survive
        n = len(yaxis) // stride * stride
        yaxis = yaxis[:n:stride]
        blocks = z[:, :n].reshape(z.shape[0], -1, stride)
        pick = np.abs(blocks).argmax(axis=2)
        z = np.take_along_axis(blocks, pick[..., None], axis=2)[..., 0]
    x = result.axis
    scale = np.abs(z).max() or 1.0
    zn = np.abs(z) / scale if overlay is not None else 0.5 + 0.5 * z / scale
    fr = _Frame((x.min(), x.max()), (yaxis.min(), yaxis.max()))
    dx = fr.pw / len(x)
    dy = fr.ph / max(len(yaxis), 1)
    body = []
    for i in range(len(x)):
        xi = _M["left"] + i * dx
        for j in range(len(yaxis)):
            yj = _M["top"] + fr.ph - (j + 1) * dy
            body.append(f'<rect x="{xi:.2f}" y="{yj:.2f}" width="{dx + 0.3:.2f}" '
                        f'height="{dy + 0.3:.2f}" fill="{_colour(zn[i, j])}"/>')
    if overlay is not None:
        body.append(_polyline(fr, x, np.asarray(overlay) / 1e6, "white", 2.5))
    if ridge is not None:
        for a, b in zip(fr.px(x), fr.py(np.asarray(ridge) / 1e6)):
            body.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="black"/>')
    body += fr.axes(result.axis_name, ylabel)
    return _document(body, result.observable_name)


def emit_plot(result: SweepResult, kind: str = "line") -> str:
    """SVG text for ``result``.

    ``kind='line'`` draws the observable and extra columns against the axis,
    marking any ``meta['peaks']``. ``kind='contour'`` renders a heatmap of a
    (B0, frequency) map with the analytic nutation curve as a white overlay,
    or of a (B0, t) transient matrix.
    """
    if kind not in PLOT_KINDS:
        raise UsageError(f"unsupported plot kind {kind!r}; choose from {PLOT_KINDS}")
    if result is None or np.asarray(result.axis).size == 0 or np.asarray(result.values).size == 0:
        raise UsageError("cannot plot an empty result")
    return _line_plot(result) if kind == "line" else _contour_plot(result)

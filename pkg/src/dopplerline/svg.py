"""Hand-rolled SVG figures: line plots and heatmaps, no plotting stack.

Batch results should be inspectable with any browser, so these writers
emit standalone SVG 1.1 documents built from ``<path>`` and ``<rect>``
elements only. Every function is a pure function of its inputs; re-running
a scenario reproduces byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError

# fixed layout in px; the left margin leaves room for tick labels
_ML, _MR, _MT, _MB = 64.0, 20.0, 34.0, 46.0
_CBAR_W = 14.0     # heatmap colorbar strip
_CBAR_GAP = 52.0   # extra right margin holding the strip and its labels

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

# sequential: white -> deep blue (non-negative data, e.g. |IQ| maps)
_SEQ = (
    (1.00, 1.00, 1.00),
    (0.84, 0.89, 0.95),
    (0.45, 0.66, 0.86),
    (0.13, 0.37, 0.66),
    (0.03, 0.15, 0.33),
)
# diverging: blue -> white -> red, centered on zero (signed data)
_DIV = (
    (0.13, 0.30, 0.72),
    (1.00, 1.00, 1.00),
    (0.78, 0.10, 0.11),
)


def _ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi] on a 1-2-5 ladder."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError("axis limits must be finite")
    if hi <= lo:
        hi = lo + (abs(lo) or 1.0)
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / max(target, 2)))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0, 20.0):
        if span / (step * mult) <= target:
            step *= mult
            break
    else:
        step *= 50.0
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    v = first
    while v <= hi + 1e-9 * span:
        out.append(0.0 if abs(v) < 1e-9 * span else v)
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _color(anchors, u: float) -> str:
    """Hex color at fraction u of a piecewise-linear RGB ramp."""
    u = min(1.0, max(0.0, u))
    pos = u * (len(anchors) - 1)
    k = min(int(pos), len(anchors) - 2)
    w = pos - k
    rgb = tuple(
        int(round(255.0 * ((1.0 - w) * a + w * b)))
        for a, b in zip(anchors[k], anchors[k + 1])
    )
    return "#%02x%02x%02x" % rgb


class _Frame:
    """Data-to-pixel mapping for one plot area."""

    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim = xlim, ylim

    def px(self, x: float) -> float:
        a, b = self.xlim
        return self.x0 + (x - a) / (b - a) * self.w

    def py(self, y: float) -> float:
        a, b = self.ylim
        return self.y0 + self.h - (y - a) / (b - a) * self.h


def _header(width: float, height: float, title: str) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" font-size="14" '
            f'text-anchor="middle" font-family="sans-serif">'
            f"{escape(title)}</text>"
        )
    return parts


def _axes(fr: _Frame, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{fr.x0:.1f}" y="{fr.y0:.1f}" width="{fr.w:.1f}" '
        f'height="{fr.h:.1f}" fill="none" stroke="#444" stroke-width="1"/>'
    ]
    for xv in _ticks(*fr.xlim):
        if not fr.xlim[0] <= xv <= fr.xlim[1]:
            continue
        px = fr.px(xv)
        parts.append(
            f'<line x1="{px:.1f}" y1="{fr.y0 + fr.h:.1f}" x2="{px:.1f}" '
            f'y2="{fr.y0 + fr.h + 4:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{fr.y0 + fr.h + 17:.1f}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(xv)}</text>'
        )
    for yv in _ticks(*fr.ylim):
        if not fr.ylim[0] <= yv <= fr.ylim[1]:
            continue
        py = fr.py(yv)
        parts.append(
            f'<line x1="{fr.x0 - 4:.1f}" y1="{py:.1f}" x2="{fr.x0:.1f}" '
            f'y2="{py:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{fr.x0 - 7:.1f}" y="{py + 4:.1f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(yv)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{fr.x0 + fr.w / 2:.1f}" y="{fr.y0 + fr.h + 36:.1f}" '
            f'font-size="12" text-anchor="middle" font-family="sans-serif">'
            f"{escape(x_label)}</text>"
        )
    if y_label:
        cx, cy = fr.x0 - 46.0, fr.y0 + fr.h / 2
        parts.append(
            f'<text x="{cx:.1f}" y="{cy:.1f}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'transform="rotate(-90 {cx:.1f} {cy:.1f})">'
            f"{escape(y_label)}</text>"
        )
    return parts


def _legend(fr: _Frame, entries) -> list[str]:
    parts = []
    lx = fr.x0 + fr.w - 10.0
    ly = fr.y0 + 14.0
    for k, (label, color) in enumerate(entries):
        if not label:
            continue
        y = ly + 16.0 * k
        parts.append(
            f'<line x1="{lx - 26:.1f}" y1="{y - 4:.1f}" x2="{lx - 8:.1f}" '
            f'y2="{y - 4:.1f}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx - 30:.1f}" y="{y:.1f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">'
            f"{escape(label)}</text>"
        )
    return parts


def _polyline(fr: _Frame, x, y, color: str, width: float = 1.5,
              dashed: bool = False) -> str:
    good = np.isfinite(x) & np.isfinite(y)
    cmds, pen = [], "M"
    for xv, yv, ok in zip(x, y, good):
        if not ok:
            pen = "M"
            continue
        cmds.append(f"{pen}{fr.px(xv):.2f},{fr.py(yv):.2f}")
        pen = "L"
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (
        f'<path d="{" ".join(cmds)}" fill="none" stroke="{color}" '
        f'stroke-width="{width:g}"{dash}/>'
    )


def _dots(fr: _Frame, x, y, color: str, r: float = 3.0) -> str:
    pts = [
        f'<circle cx="{fr.px(xv):.2f}" cy="{fr.py(yv):.2f}" r="{r:g}" '
        f'fill="{color}"/>'
        for xv, yv in zip(x, y)
        if math.isfinite(xv) and math.isfinite(yv)
    ]
    return "".join(pts)


def _limits(arrays, pad: float = 0.04) -> tuple[float, float]:
    vals = np.concatenate([np.asarray(a, float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise ValidationError("no finite data to plot")
    lo, hi = float(vals.min()), float(vals.max())
    if hi == lo:
        lo, hi = lo - (abs(lo) or 1.0), hi + (abs(hi) or 1.0)
    span = hi - lo
    return lo - pad * span, hi + pad * span


def line_plot(path, curves, *, title: str = "", x_label: str = "",
              y_label: str = "", size: tuple[int, int] = (720, 440)) -> str:
    """Write a multi-curve line plot.

    ``curves`` is a sequence of ``(x, y, label)`` or ``(x, y, label, style)``
    with style one of ``"line"``, ``"dashed"``, ``"dots"``.
    """
    curves = [
        (np.asarray(c[0], float), np.asarray(c[1], float), c[2],
         c[3] if len(c) > 3 else "line")
        for c in curves
    ]
    if not curves:
        raise ValidationError("line_plot needs at least one curve")
    for x, y, label, style in curves:
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValidationError(f"curve {label!r} needs matching 1-d x, y")
        if style not in ("line", "dashed", "dots"):
            raise ValidationError(f"unknown curve style {style!r}")
    width, height = size
    fr = _Frame(
        _ML, _MT, width - _ML - _MR, height - _MT - _MB,
        _limits([c[0] for c in curves]),
        _limits([c[1] for c in curves]),
    )
    parts = _header(width, height, title)
    parts += _axes(fr, x_label, y_label)
    parts.append(
        f'<clipPath id="plot"><rect x="{fr.x0:.1f}" y="{fr.y0:.1f}" '
        f'width="{fr.w:.1f}" height="{fr.h:.1f}"/></clipPath>'
    )
    parts.append('<g clip-path="url(#plot)">')
    entries = []
    for k, (x, y, label, style) in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        if style == "dots":
            parts.append(_dots(fr, x, y, color))
        else:
            parts.append(_polyline(fr, x, y, color, dashed=(style == "dashed")))
        entries.append((label, color))
    parts.append("</g>")
    parts += _legend(fr, entries)
    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return str(out)


def _cell_edges(axis: np.ndarray) -> np.ndarray:
    if axis.size == 1:
        half = abs(axis[0]) or 0.5
        return np.array([axis[0] - half, axis[0] + half])
    mids = 0.5 * (axis[1:] + axis[:-1])
    first = axis[0] - (mids[0] - axis[0])
    last = axis[-1] + (axis[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def heat_map(path, x, y, values, *, title: str = "", x_label: str = "",
             y_label: str = "", overlays=(),
             size: tuple[int, int] = (760, 520)) -> str:
    """Write a heatmap of ``values[i, j]`` at ``(y[i], x[j])``.

    Signed data gets a diverging blue-white-red ramp centered on zero,
    non-negative data a white-to-blue ramp. ``overlays`` are ``(x, y,
    label)`` polylines drawn on the same axes (worldlines, ray traces).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(values, float)
    if x.ndim != 1 or y.ndim != 1 or z.shape != (y.size, x.size):
        raise ValidationError("values must have shape (len(y), len(x))")
    if not np.all(np.isfinite(z)):
        raise ValidationError("heatmap values must be finite")
    if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
        raise ValidationError("heatmap axes must be strictly increasing")

    vmin, vmax = float(z.min()), float(z.max())
    if vmin < 0.0 < vmax:
        anchors = _DIV
        bound = max(-vmin, vmax)
        lo, hi = -bound, bound
    else:
        anchors = _SEQ
        lo, hi = vmin, vmax
    scale = (hi - lo) or 1.0

    width, height = size
    fr = _Frame(
        _ML, _MT, width - _ML - _MR - _CBAR_GAP, height - _MT - _MB,
        (float(_cell_edges(x)[0]), float(_cell_edges(x)[-1])),
        (float(_cell_edges(y)[0]), float(_cell_edges(y)[-1])),
    )
    xe = [fr.px(v) for v in _cell_edges(x)]
    ye = [fr.py(v) for v in _cell_edges(y)]

    parts = _header(width, height, title)
    # cells, merging horizontal runs of equal color to keep files small
    for i in range(y.size):
        top, bot = ye[i + 1], ye[i]
        j = 0
        while j < x.size:
            c = _color(anchors, (z[i, j] - lo) / scale)
            k = j + 1
            while k < x.size and _color(anchors, (z[i, k] - lo) / scale) == c:
                k += 1
            parts.append(
                f'<rect x="{xe[j]:.2f}" y="{top:.2f}" '
                f'width="{xe[k] - xe[j]:.2f}" height="{bot - top:.2f}" '
                f'fill="{c}"/>'
            )
            j = k
    parts += _axes(fr, x_label, y_label)

    entries = []
    if overlays:
        parts.append(
            f'<clipPath id="plot"><rect x="{fr.x0:.1f}" y="{fr.y0:.1f}" '
            f'width="{fr.w:.1f}" height="{fr.h:.1f}"/></clipPath>'
        )
        parts.append('<g clip-path="url(#plot)">')
        for k, (ox, oy, label) in enumerate(overlays):
            color = _PALETTE[k % len(_PALETTE)]
            parts.append(_polyline(fr, np.asarray(ox, float),
                                   np.asarray(oy, float), color, width=2.0))
            entries.append((label, color))
        parts.append("</g>")
        parts += _legend(fr, entries)

    # colorbar strip to the right of the frame
    bx = fr.x0 + fr.w + 16.0
    nseg = 64
    for s in range(nseg):
        u0 = s / nseg
        parts.append(
            f'<rect x="{bx:.1f}" '
            f'y="{fr.y0 + fr.h * (1 - (s + 1) / nseg):.2f}" '
            f'width="{_CBAR_W:g}" height="{fr.h / nseg + 0.5:.2f}" '
            f'fill="{_color(anchors, u0 + 0.5 / nseg)}"/>'
        )
    parts.append(
        f'<rect x="{bx:.1f}" y="{fr.y0:.1f}" width="{_CBAR_W:g}" '
        f'height="{fr.h:.1f}" fill="none" stroke="#444"/>'
    )
    for u, v in ((0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)):
        py = fr.y0 + fr.h * (1.0 - u)
        parts.append(
            f'<text x="{bx + _CBAR_W + 4:.1f}" y="{py + 4:.1f}" '
            f'font-size="10" font-family="sans-serif">{_fmt(v)}</text>'
        )
    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return str(out)

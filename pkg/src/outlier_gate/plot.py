"""Deterministic SVG scatter plots with outlier annotation and cluster coloring."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .dataset import Dataset, DatasetError, RowSelection

__all__ = ["PlotSpec", "PALETTE", "render_svg"]

# Cluster fill colors, indexed by cluster id (cycled past the end).
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#d62728",
)
DEFAULT_FILL = "#4c72b0"
HIGHLIGHT_COLOR = "#d62728"


@dataclass(frozen=True)
class PlotSpec:
    x_variable: str
    y_variable: str
    highlight: RowSelection = RowSelection()
    color_by: Optional[Sequence[int]] = None
    width: int = 640
    height: int = 480

    def validate(self, ds: Dataset) -> None:
        if self.x_variable == self.y_variable:
            raise DatasetError("x and y variables must differ")
        ds.column(self.x_variable)
        ds.column(self.y_variable)
        if self.highlight and self.highlight.indices[-1] >= ds.n:
            raise DatasetError(f"highlight index {self.highlight.indices[-1]} out of range")
        if self.color_by is not None:
            if len(self.color_by) != ds.n:
                raise DatasetError(
                    f"assignments have {len(self.color_by)} entries, dataset has {ds.n} rows"
                )
            if min(self.color_by) < 0:
                raise DatasetError("cluster indices must be non-negative")
        if self.width < 100 or self.height < 100:
            raise DatasetError("plot must be at least 100x100 pixels")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def _span(v: np.ndarray) -> tuple[float, float]:
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render_svg(ds: Dataset, spec: PlotSpec) -> str:
    spec.validate(ds)
    x = ds.column(spec.x_variable)
    y = ds.column(spec.y_variable)
    w, h = spec.width, spec.height
    left, right, top, bottom = 60, 20, 20, 50
    x0, x1 = _span(x)
    y0, y1 = _span(y)

    def px(v):
        return left + (v - x0) / (x1 - x0) * (w - left - right)

    def py(v):
        return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
        f'<g class="axes" stroke="#000000" stroke-width="1">'
        f'<line x1="{left}" y1="{h - bottom}" x2="{w - right}" y2="{h - bottom}"/>'
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{h - bottom}"/></g>',
    ]
    ticks = ['<g class="ticks" font-family="sans-serif" font-size="10">']
    for t in _ticks(x0, x1):
        ticks.append(
            f'<text x="{px(t):.2f}" y="{h - bottom + 14}" text-anchor="middle">{t:.2f}</text>'
        )
    for t in _ticks(y0, y1):
        ticks.append(
            f'<text x="{left - 6}" y="{py(t) + 3:.2f}" text-anchor="end">{t:.2f}</text>'
        )
    ticks.append("</g>")
    out.extend(ticks)
    out.append(
        f'<text class="xlabel" x="{(left + w - right) / 2:.1f}" y="{h - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{escape(spec.x_variable)}</text>"
    )
    out.append(
        f'<text class="ylabel" x="16" y="{(top + h - bottom) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(top + h - bottom) / 2:.1f})">'
        f"{escape(spec.y_variable)}</text>"
    )

    out.append('<g class="points">')
    for i in range(ds.n):
        cx, cy = px(x[i]), py(y[i])
        if spec.color_by is not None:
            fill = PALETTE[int(spec.color_by[i]) % len(PALETTE)]
        else:
            fill = DEFAULT_FILL
        if i in spec.highlight:
            # distinct marker: a square
            out.append(
                f'<rect class="point outlier" data-row="{i}" x="{cx - 4:.2f}" y="{cy - 4:.2f}" '
                f'width="8" height="8" fill="{fill}" stroke="{HIGHLIGHT_COLOR}"/>'
            )
        else:
            out.append(
                f'<circle class="point" data-row="{i}" cx="{cx:.2f}" cy="{cy:.2f}" r="3" '
                f'fill="{fill}"/>'
            )
    out.append("</g>")

    out.append('<g class="annotations">')
    for i in spec.highlight:
        out.append(
            f'<circle class="annotation" data-row="{i}" cx="{px(x[i]):.2f}" cy="{py(y[i]):.2f}" '
            f'r="12" fill="none" stroke="{HIGHLIGHT_COLOR}" stroke-width="2"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Decision-boundary grids, their CSV form, and a self-contained SVG rendering."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

import numpy as np

from .hybrid import HybridModel, forward
from .moons import Dataset

DEFAULT_WINDOW = (-1.5, 2.5, -1.0, 1.5)
DEFAULT_RESOLUTION = (100, 100)
CLASS_FILL = ("#f4c7a1", "#a9c8e8")
POINT_FILL = ("#c0392b", "#1f5f99")


@dataclass
class BoundaryGrid:
    xs: np.ndarray  # (W,)
    ys: np.ndarray  # (H,)
    classes: np.ndarray  # (H, W)
    logits: np.ndarray  # (H, W, 2)

    @property
    def shape(self):
        return self.classes.shape

    def fractions(self) -> tuple:
        return tuple(float(np.mean(self.classes == c)) for c in (0, 1))


def parse_resolution(text: str) -> tuple:
    """'WxH' -> (W, H); both at least 2."""
    try:
        w, h = (int(p) for p in text.lower().split("x"))
    except ValueError as exc:
        raise ValueError(f"grid must look like WxH, got {text!r}") from exc
    if w < 2 or h < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    return w, h


def boundary_grid(model: HybridModel, window=DEFAULT_WINDOW, resolution=DEFAULT_RESOLUTION,
                  circuits=None) -> BoundaryGrid:
    w, h = resolution
    if w < 2 or h < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, w)
    ys = np.linspace(y0, y1, h)
    gx, gy = np.meshgrid(xs, ys)  # row-major: y outer, x inner
    logits, _ = forward(model, np.column_stack([gx.ravel(), gy.ravel()]), circuits)
    classes = np.argmax(logits, axis=1)
    return BoundaryGrid(xs, ys, classes.reshape(h, w), logits.reshape(h, w, 2))


def compare_grids(a: BoundaryGrid, b: BoundaryGrid) -> dict:
    if a.shape != b.shape:
        raise ValueError("grids differ in shape")
    return {
        "cells": int(a.classes.size),
        "disagreeing": int(np.count_nonzero(a.classes != b.classes)),
        "max_logit_diff": float(np.max(np.abs(a.logits - b.logits))),
    }


def write_grid_csv(path, grid: BoundaryGrid) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "class", "logit0", "logit1"])
        for i, y in enumerate(grid.ys):
            for j, x in enumerate(grid.xs):
                l0, l1 = grid.logits[i, j]
                wr.writerow([format(x, ".17g"), format(y, ".17g"), int(grid.classes[i, j]),
                             format(l0, ".17g"), format(l1, ".17g")])


def render_svg(grid: BoundaryGrid, data: Dataset | None = None, width: int = 500, title: str = "") -> str:
    """Class regions as run-length rectangles, with optional data points on top."""
    x0, x1 = grid.xs[0], grid.xs[-1]
    y0, y1 = grid.ys[0], grid.ys[-1]
    height = max(1, int(round(width * (y1 - y0) / (x1 - x0))))
    nh, nw = grid.shape
    cw, ch = width / nw, height / nh

    def px(x):
        return (x - x0) / (x1 - x0) * width

    def py(y):
        return height - (y - y0) / (y1 - y0) * height

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if title:
        out.append(f"<title>{title.replace('&', '&amp;').replace('<', '&lt;')}</title>")
    out.append('<g shape-rendering="crispEdges">')
    for i in range(nh):
        row = grid.classes[i]
        top = height - (i + 1) * ch
        start = 0
        for j in range(1, nw + 1):
            if j == nw or row[j] != row[start]:
                out.append(
                    f'<rect x="{start * cw:.3f}" y="{top:.3f}" width="{(j - start) * cw:.3f}" '
                    f'height="{ch:.3f}" fill={quoteattr(CLASS_FILL[int(row[start])])}/>'
                )
                start = j
    out.append("</g>")
    if data is not None:
        out.append('<g stroke="white" stroke-width="0.4">')
        for (x, y), lab in zip(data.points, data.labels):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" fill={quoteattr(POINT_FILL[int(lab)])}/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Binary-mask analysis: contours, areas, centroids, IoU.

Contour extraction runs on a compiled kernel when the extension built,
otherwise on a pure-Python fallback; both produce identical output.
Contour points are (u, v) pixel-center coordinates (u = column, v = row).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BothEmpty, DimensionMismatch, NoContours

try:
    from . import _contour_cy as _kernel
    KERNEL_BACKEND = "cython"
except ImportError:  # extension not built
    from . import _contour_py as _kernel
    KERNEL_BACKEND = "python"

from . import _contour_py


@dataclass(frozen=True)
class BinaryMask:
    """Row-major binary grid; nonzero = foreground."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise DimensionMismatch("mask data must be a 2D grid")
        d = np.ascontiguousarray(d != 0, dtype=np.uint8)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def count(self) -> int:
        return int(self.data.sum())

    @staticmethod
    def zeros(width, height) -> "BinaryMask":
        return BinaryMask(np.zeros((height, width), dtype=np.uint8))


@dataclass(frozen=True)
class Contour:
    """Ordered boundary polyline over pixel centers; implicitly closed."""

    points: np.ndarray  # (N, 2) float64, columns (u, v)
    closed: bool = True

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if p.shape[0] == 0:
            raise NoContours("contour must have at least one point")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def start_pixel(self):
        return (int(round(self.points[0, 1])), int(round(self.points[0, 0])))


def extract_contours(mask: BinaryMask, kernel=None) -> list[Contour]:
    """One closed outer contour per 8-connected foreground component.

    Moore-neighbor tracing over boundary pixel centers; contours are ordered
    by topmost-leftmost start pixel. Holes are not traced.
    """
    k = kernel or _kernel
    raw = k.extract_contours_raw(mask.data)
    # kernel emits (row, col); contour points are (u, v) = (col, row)
    return [Contour(points=rc[:, ::-1].astype(np.float64)) for rc in raw]


def extract_contours_reference(mask: BinaryMask) -> list[Contour]:
    """Always runs the pure-Python kernel (parity checks, benchmarks)."""
    return extract_contours(mask, kernel=_contour_py)


def contour_area(c: Contour) -> float:
    """Absolute shoelace area of the closed polygon; 0 below 3 points."""
    p = c.points
    if p.shape[0] < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def largest_contour(cs: list[Contour]) -> Contour:
    """Contour of maximal area; ties go to the earliest in extraction order."""
    if not cs:
        raise NoContours("no contours to choose from")
    best = cs[0]
    best_a = contour_area(best)
    for c in cs[1:]:
        a = contour_area(c)
        if a > best_a:
            best, best_a = c, a
    return best


def contour_centroid(c: Contour) -> np.ndarray:
    """Arithmetic mean of the boundary points (not the filled-region centroid)."""
    return c.points.mean(axis=0)


def filled_centroid(mask: BinaryMask) -> np.ndarray:
    """Mean of foreground pixel centers; opt-in alternative to the boundary mean."""
    rows, cols = np.nonzero(mask.data)
    if rows.size == 0:
        raise BothEmpty("mask has no foreground pixels")
    return np.array([cols.mean(), rows.mean()])


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.data.shape} vs {b.data.shape}")
    inter = int(np.count_nonzero(a.data & b.data))
    union = int(np.count_nonzero(a.data | b.data))
    if union == 0:
        raise BothEmpty("IoU undefined: both masks empty")
    return inter / union

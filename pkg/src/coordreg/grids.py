"""Normalized pixel-center coordinate grids.

A map of size (m rows, n cols) is embedded in the square [-1, 1]^2 with the
image's top-left corner at (-1, -1) and bottom-right at (1, 1). Pixel (i, j),
1-based, is centered at x = (2j - (n+1))/n and y = (2i - (m+1))/m, so pixel
centers lie strictly inside the square and the pixel pitch is 2/n
horizontally and 2/m vertically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class CoordPair(NamedTuple):
    """A sub-pixel location in normalized image coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class CoordGrid:
    """Constant matrices holding each pixel's own x and y coordinate."""

    xs: np.ndarray  # (m, n); varies only with the column index
    ys: np.ndarray  # (m, n); varies only with the row index

    @property
    def m(self) -> int:
        return self.xs.shape[0]

    @property
    def n(self) -> int:
        return self.xs.shape[1]

    @property
    def pitch_x(self) -> float:
        return 2.0 / self.n

    @property
    def pitch_y(self) -> float:
        return 2.0 / self.m


def make_coord_grid(m: int, n: int) -> CoordGrid:
    """Build the (m, n) pixel-center coordinate grid."""
    if m < 1 or n < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {(m, n)}")
    j = np.arange(1, n + 1, dtype=np.float64)
    i = np.arange(1, m + 1, dtype=np.float64)
    x_row = (2.0 * j - (n + 1)) / n
    y_col = (2.0 * i - (m + 1)) / m
    xs = np.tile(x_row, (m, 1))
    ys = np.tile(y_col[:, None], (1, n))
    return CoordGrid(xs=xs, ys=ys)

"""Integral images (summed-area tables) and constant-time box sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError
from .image_io import GrayImage


@dataclass(frozen=True)
class BoxRegion:
    """Inclusive pixel rectangle ``[x0, x1] x [y0, y1]``."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> int:
        return self.width * self.height


class IntegralImage:
    """Cumulative sums where ``table[y, x]`` covers rows ``0..y`` and columns ``0..x``.

    A zero-padded copy (one extra leading row and column) is kept so box sums
    need no branching at the image edge.
    """

    __slots__ = ("width", "height", "_padded")

    def __init__(self, padded: np.ndarray):
        self._padded = padded
        self._padded.flags.writeable = False
        self.height = padded.shape[0] - 1
        self.width = padded.shape[1] - 1

    @property
    def table(self) -> np.ndarray:
        return self._padded[1:, 1:]

    @property
    def padded(self) -> np.ndarray:
        return self._padded

    def box_sum(self, r: BoxRegion) -> float:
        return box_sum(self, r)


def to_integral(img: GrayImage) -> IntegralImage:
    padded = np.zeros((img.height + 1, img.width + 1), dtype=np.float64)
    np.cumsum(img.pixels, axis=0, dtype=np.float64, out=padded[1:, 1:])
    np.cumsum(padded[1:, 1:], axis=1, out=padded[1:, 1:])
    return IntegralImage(padded)


def box_sum(ii: IntegralImage, r: BoxRegion) -> float:
    if not (0 <= r.x0 <= r.x1 < ii.width and 0 <= r.y0 <= r.y1 < ii.height):
        raise BoundsError(f"region {r} outside {ii.width}x{ii.height} image")
    p = ii.padded
    return float(p[r.y1 + 1, r.x1 + 1] - p[r.y0, r.x1 + 1] - p[r.y1 + 1, r.x0] + p[r.y0, r.x0])

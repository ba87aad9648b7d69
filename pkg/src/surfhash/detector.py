"""Box-filter Hessian blob detector over a full-resolution scale space.

Responses are ``(Dxx * Dyy - (w * Dxy)**2) / L**4`` for filter size ``L``.
Keypoints are strict maxima of that response over the 3x3x3 neighbourhood
spanning adjacent filter sizes of one octave.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BoundsError, DomainError
from .image_io import GrayImage
from .integral import BoxRegion, IntegralImage, box_sum, to_integral

log = logging.getLogger(__name__)

BASE_FILTER_SIZE = 9
BASE_SCALE = 1.2
HESSIAN_WEIGHT = 0.9


@dataclass(frozen=True)
class DetectorConfig:
    octaves: int = 4
    levels_per_octave: int = 4
    base_filter_size: int = BASE_FILTER_SIZE
    hessian_weight: float = HESSIAN_WEIGHT
    response_threshold: float = 1e-4
    max_keypoints: int | None = None

    def __post_init__(self):
        if self.octaves < 1:
            raise DomainError("octaves must be >= 1")
        if self.levels_per_octave < 3:
            raise DomainError("levels_per_octave must be >= 3")
        if self.base_filter_size != BASE_FILTER_SIZE:
            raise DomainError("base_filter_size is fixed at 9")
        if not 0.0 < self.hessian_weight <= 1.0:
            raise DomainError("hessian_weight must lie in (0, 1]")
        if self.max_keypoints is not None and self.max_keypoints < 1:
            raise DomainError("max_keypoints must be positive when set")

    def filter_sizes(self) -> list[list[int]]:
        """Filter sizes per octave: 9,15,21,27 / 15,27,39,51 / 27,51,75,99 / ..."""
        sizes = []
        first = self.base_filter_size
        for octave in range(self.octaves):
            step = 6 * 2**octave
            sizes.append([first + step * j for j in range(self.levels_per_octave)])
            first = sizes[-1][1]
        return sizes


@dataclass(frozen=True)
class KeyPoint:
    x: int
    y: int
    scale: float
    response: float


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """Normalized det(H) for one filter size, NaN inside the invalid border band."""

    filter_size: int
    octave: int
    level: int
    responses: np.ndarray

    @property
    def border(self) -> int:
        return self.filter_size // 2


class Lobe(NamedTuple):
    # inclusive offsets from the filter centre
    dx0: int
    dy0: int
    dx1: int
    dy1: int
    weight: float


def lobe_layout(filter_size: int) -> dict[str, tuple[Lobe, ...]]:
    """Box lobes approximating the Gaussian second derivatives at ``filter_size``."""
    _check_filter_size(filter_size)
    lobe = filter_size // 3
    half = filter_size // 2
    mid = lobe // 2
    span = lobe - 1
    dyy = (
        Lobe(-span, -half, span, -mid - 1, 1.0),
        Lobe(-span, -mid, span, mid, -2.0),
        Lobe(-span, mid + 1, span, half, 1.0),
    )
    dxx = tuple(Lobe(b.dy0, b.dx0, b.dy1, b.dx1, b.weight) for b in dyy)
    dxy = (
        Lobe(-lobe, -lobe, -1, -1, 1.0),
        Lobe(1, -lobe, lobe, -1, -1.0),
        Lobe(-lobe, 1, -1, lobe, -1.0),
        Lobe(1, 1, lobe, lobe, 1.0),
    )
    return {"dxx": dxx, "dyy": dyy, "dxy": dxy}


def _check_filter_size(filter_size: int) -> None:
    if filter_size < BASE_FILTER_SIZE or (filter_size - BASE_FILTER_SIZE) % 6:
        raise DomainError(f"filter size {filter_size} is not 9 + 6n")


def filter_scale(filter_size: int) -> float:
    return BASE_SCALE * filter_size / BASE_FILTER_SIZE


def hessian_response(ii: IntegralImage, x: int, y: int, filter_size: int,
                     weight: float = HESSIAN_WEIGHT) -> float:
    layout = lobe_layout(filter_size)
    half = filter_size // 2
    if not (half <= x < ii.width - half and half <= y < ii.height - half):
        raise BoundsError(f"filter {filter_size} at ({x}, {y}) overruns the image border")

    def derivative(lobes):
        return sum(
            b.weight * box_sum(ii, BoxRegion(x + b.dx0, y + b.dy0, x + b.dx1, y + b.dy1))
            for b in lobes
        )

    dxx = derivative(layout["dxx"])
    dyy = derivative(layout["dyy"])
    dxy = derivative(layout["dxy"])
    return (dxx * dyy - (weight * dxy) ** 2) / float(filter_size) ** 4


def response_grid(ii: IntegralImage, filter_size: int,
                  weight: float = HESSIAN_WEIGHT) -> np.ndarray:
    """Vectorized :func:`hessian_response` over every pixel; NaN where the filter overruns."""
    layout = lobe_layout(filter_size)
    h, w = ii.height, ii.width
    half = filter_size // 2
    out = np.full((h, w), np.nan)
    if h < filter_size or w < filter_size:
        return out
    p = ii.padded
    ny, nx = h - 2 * half, w - 2 * half

    def corner(dy, dx):
        return p[half + dy: half + dy + ny, half + dx: half + dx + nx]

    def derivative(lobes):
        acc = np.zeros((ny, nx))
        for b in lobes:
            s = (corner(b.dy1 + 1, b.dx1 + 1) - corner(b.dy0, b.dx1 + 1)
                 - corner(b.dy1 + 1, b.dx0) + corner(b.dy0, b.dx0))
            acc += b.weight * s
        return acc

    dxx = derivative(layout["dxx"])
    dyy = derivative(layout["dyy"])
    dxy = derivative(layout["dxy"])
    out[half:h - half, half:w - half] = (dxx * dyy - (weight * dxy) ** 2) / float(filter_size) ** 4
    return out


def build_response_pyramid(ii: IntegralImage, cfg: DetectorConfig) -> list[ResponseMap]:
    maps = []
    cache: dict[int, np.ndarray] = {}
    limit = min(ii.width, ii.height)
    for octave, sizes in enumerate(cfg.filter_sizes()):
        for level, size in enumerate(sizes):
            if size > limit:
                log.debug("omitting octave %d level %d: filter %d exceeds %dx%d image",
                          octave, level, size, ii.width, ii.height)
                continue
            if size not in cache:
                grid = response_grid(ii, size, cfg.hessian_weight)
                grid.flags.writeable = False
                cache[size] = grid
            maps.append(ResponseMap(size, octave, level, cache[size]))
    return maps


_OFFSETS = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]


def _strict_maxima(below: np.ndarray, centre: np.ndarray, above: np.ndarray,
                   threshold: float) -> np.ndarray:
    h, w = centre.shape
    if h < 3 or w < 3:
        return np.zeros((0, 2), dtype=np.intp)
    c = centre[1:-1, 1:-1]
    keep = c > threshold
    for layer, is_centre in ((below, False), (centre, True), (above, False)):
        for dy, dx in _OFFSETS:
            if is_centre and dy == 0 and dx == 0:
                continue
            # NaN neighbours compare False, so incomplete neighbourhoods drop out
            keep &= c > layer[1 + dy: h - 1 + dy, 1 + dx: w - 1 + dx]
    ys, xs = np.nonzero(keep)
    return np.stack([ys + 1, xs + 1], axis=1)


def detect_from_pyramid(maps: list[ResponseMap], cfg: DetectorConfig) -> list[KeyPoint]:
    by_octave: dict[int, dict[int, ResponseMap]] = {}
    for m in maps:
        by_octave.setdefault(m.octave, {})[m.level] = m
    found = []
    for levels in by_octave.values():
        for level, m in levels.items():
            below, above = levels.get(level - 1), levels.get(level + 1)
            if below is None or above is None:
                continue
            scale = filter_scale(m.filter_size)
            for y, x in _strict_maxima(below.responses, m.responses, above.responses,
                                       cfg.response_threshold):
                found.append(KeyPoint(int(x), int(y), scale, float(m.responses[y, x])))
    found.sort(key=lambda k: (-k.response, k.y, k.x, k.scale))
    if cfg.max_keypoints is not None:
        found = found[: cfg.max_keypoints]
    return found


def detect_keypoints(img: GrayImage, cfg: DetectorConfig | None = None) -> list[KeyPoint]:
    cfg = cfg or DetectorConfig()
    return detect_from_pyramid(build_response_pyramid(to_integral(img), cfg), cfg)

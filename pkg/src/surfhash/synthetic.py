"""Seeded synthetic test scenes: smooth background with blobs and rectangles."""

from __future__ import annotations

import numpy as np

from .image_io import GrayImage


def textured_image(size: int = 256, seed: int = 0, *, blobs: int | None = None,
                   rects: int | None = None) -> GrayImage:
    rng = np.random.default_rng(seed)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    gx, gy = rng.uniform(-0.15, 0.15, size=2)
    img = 0.5 + gx * (xx / w - 0.5) + gy * (yy / h - 0.5)

    n_blobs = blobs if blobs is not None else max(8, size * size // 2500)
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        sigma = rng.uniform(2.0, size / 24)
        amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.15, 0.45)
        img += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2))

    n_rects = rects if rects is not None else max(3, size // 40)
    for _ in range(n_rects):
        rw, rh = rng.integers(size // 32 + 2, size // 6 + 3, size=2)
        x0, y0 = rng.integers(0, w - rw), rng.integers(0, h - rh)
        img[y0:y0 + rh, x0:x0 + rw] += rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 0.3)

    return GrayImage(np.clip(img, 0.0, 1.0))


def square_image(size: int = 64, square: int = 8, value: float = 1.0) -> GrayImage:
    """Black image with one centred bright square."""
    img = np.zeros((size, size))
    o = (size - square) // 2
    img[o:o + square, o:o + square] = value
    return GrayImage(img)

"""Decoding of PNG/JPEG files into grayscale float images."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
SUPPORTED_FORMATS = {"PNG", "JPEG"}


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Luminance image with values in [0, 1].

    ``pixels`` has shape ``(height, width)``; row-major, origin top-left.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)

    @classmethod
    def from_uint8(cls, samples: np.ndarray) -> "GrayImage":
        return cls(np.asarray(samples, dtype=np.float64) / 255.0)


def _decode(im: Image.Image) -> GrayImage:
    if im.format not in SUPPORTED_FORMATS:
        raise ImageFormatError(f"unsupported image format: {im.format}")
    if im.width == 0 or im.height == 0:
        raise ImageFormatError("image has a zero dimension")
    mode = im.mode
    if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise ImageFormatError(f"unsupported sample depth (mode {mode})")
    if mode == "1":
        im = im.convert("L")
    elif mode == "P":
        im = im.convert("RGBA" if "transparency" in im.info else "RGB")
    elif mode not in ("L", "LA", "RGB", "RGBA", "CMYK", "YCbCr"):
        im = im.convert("RGB")

    if im.mode in ("L", "LA"):
        # alpha dropped, not composited
        samples = np.asarray(im.getchannel("L"), dtype=np.float64)
    else:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
        r, g, b = LUMA_WEIGHTS
        samples = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    return GrayImage(np.clip(samples / 255.0, 0.0, 1.0))


def load_grayscale(path: str | os.PathLike) -> GrayImage:
    """Load a PNG or JPEG file as a :class:`GrayImage`.

    Color inputs are reduced with BT.601 luma before scaling by 1/255.
    Raises ``OSError`` if the file cannot be read and
    :class:`ImageFormatError` if it is not a decodable PNG/JPEG.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_bytes(data)


def decode_bytes(data: bytes) -> GrayImage:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            return _decode(im)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(str(exc)) from exc
    except (SyntaxError, ValueError, OSError) as exc:
        # truncated or corrupt payloads surface as assorted Pillow errors
        raise ImageFormatError(f"cannot decode image: {exc}") from exc


def save_png(img: GrayImage, path: str | os.PathLike) -> None:
    Image.fromarray(img.to_uint8(), mode="L").save(path, format="PNG")

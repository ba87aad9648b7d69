"""Sender-side hash generation and the binary ``.ihsh`` wire format.

Layout (big-endian)::

    b"IHSH" | version:u8 | k:u16 | width:u32 | height:u32 | fingerprint:u32 | k * (x:f32, y:f32)

For ``k == 1`` the payload is exactly 64 bits.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, fields

import numpy as np

from .detector import DetectorConfig, KeyPoint, detect_keypoints
from .errors import DomainError, HashFormatError, HashGenerationError
from .image_io import GrayImage
from .kmeans import KMeansConfig, kmeans_pp_init, lloyd

MAGIC = b"IHSH"
VERSION = 1
_HEADER = struct.Struct(">4sBHIII")
HEADER_SIZE = _HEADER.size
MAX_K = 0xFFFF


@dataclass(frozen=True, eq=False)
class ImageHash:
    centers: np.ndarray  # shape (k, 2): columns x, y in pixels
    source_width: int
    source_height: int
    detector_fingerprint: int

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64).reshape(-1, 2)
        if len(c) < 1 or len(c) > MAX_K:
            raise DomainError(f"hash must hold 1..{MAX_K} centers, got {len(c)}")
        if not np.all(np.isfinite(c)):
            raise DomainError("hash centers must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return len(self.centers)

    def __eq__(self, other):
        if not isinstance(other, ImageHash):
            return NotImplemented
        return (np.array_equal(self.centers, other.centers)
                and self.source_width == other.source_width
                and self.source_height == other.source_height
                and self.detector_fingerprint == other.detector_fingerprint)

    def quantized(self) -> "ImageHash":
        """Copy with centers rounded to the float32 precision of the wire format."""
        return ImageHash(self.centers.astype(np.float32).astype(np.float64),
                         self.source_width, self.source_height, self.detector_fingerprint)

    def to_text(self) -> str:
        return "".join(f"{x:.6f} {y:.6f}\n" for x, y in self.centers)


def config_fingerprint(dcfg: DetectorConfig, kcfg: KMeansConfig) -> int:
    """CRC-32 over every setting that shapes the centers.

    The k-means++ seed is excluded: the receiver never draws seeds.
    """
    parts = [f"{f.name}={getattr(dcfg, f.name)!r}" for f in fields(dcfg)]
    parts += [f"{name}={getattr(kcfg, name)!r}" for name in ("k", "max_iterations", "tolerance")]
    return zlib.crc32(";".join(parts).encode("ascii"))


def keypoint_locations(keypoints: list[KeyPoint]) -> np.ndarray:
    return np.array([(kp.x, kp.y) for kp in keypoints], dtype=np.float64).reshape(-1, 2)


def hash_from_keypoints(keypoints: list[KeyPoint], width: int, height: int,
                        dcfg: DetectorConfig, kcfg: KMeansConfig) -> ImageHash:
    if not keypoints:
        raise HashGenerationError("no keypoints detected; the image is featureless")
    pts = keypoint_locations(keypoints)
    seeds = kmeans_pp_init(pts, kcfg.k, kcfg.rng_seed)
    result = lloyd(pts, seeds, kcfg)
    return ImageHash(result.centers, width, height, config_fingerprint(dcfg, kcfg))


def generate_hash(img: GrayImage, dcfg: DetectorConfig | None = None,
                  kcfg: KMeansConfig | None = None) -> ImageHash:
    dcfg = dcfg or DetectorConfig()
    kcfg = kcfg or KMeansConfig()
    return hash_from_keypoints(detect_keypoints(img, dcfg), img.width, img.height, dcfg, kcfg)


def encode_hash(h: ImageHash) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, h.k, h.source_width, h.source_height,
                          h.detector_fingerprint & 0xFFFFFFFF)
    return header + h.centers.astype(">f4").tobytes()


def decode_hash(data: bytes) -> ImageHash:
    if len(data) < HEADER_SIZE:
        raise HashFormatError(f"hash too short: {len(data)} bytes")
    magic, version, k, width, height, fingerprint = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise HashFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise HashFormatError(f"unsupported hash version {version}")
    if k < 1:
        raise HashFormatError("hash declares zero centers")
    payload = data[HEADER_SIZE:]
    if len(payload) != 8 * k:
        raise HashFormatError(f"payload is {len(payload)} bytes, expected {8 * k} for k={k}")
    centers = np.frombuffer(payload, dtype=">f4").astype(np.float64).reshape(k, 2)
    if not np.all(np.isfinite(centers)):
        raise HashFormatError("non-finite center coordinate")
    return ImageHash(centers, width, height, fingerprint)

"""Receiver side: seeded re-clustering and the distance-threshold decision."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .detector import DetectorConfig, KeyPoint, detect_keypoints
from .errors import ConfigurationError, DomainError
from .hashing import ImageHash, config_fingerprint, keypoint_locations
from .image_io import GrayImage
from .kmeans import KMeansConfig, lloyd

DEFAULT_THRESHOLD = 2.3922
AUTHENTIC = "authentic"
TAMPERED = "tampered"


@dataclass
class VerificationReport:
    min_distance: float | None
    per_center_distances: list[float]
    threshold: float
    verdict: str
    degenerate: bool
    iterations: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class Recomputed:
    """Receiver-side centers plus the Lloyd iteration count that produced them."""

    hash: ImageHash | None  # None when the received image has no keypoints
    iterations: int = 0
    keypoint_count: int = 0

    @property
    def degenerate(self) -> bool:
        return self.hash is None


def _check_config(received: ImageHash, dcfg: DetectorConfig, kcfg: KMeansConfig) -> None:
    if received.k != kcfg.k:
        raise ConfigurationError(f"hash has k={received.k} but the receiver uses k={kcfg.k}")
    expected = config_fingerprint(dcfg, kcfg)
    if received.detector_fingerprint != expected:
        raise ConfigurationError(
            f"configuration fingerprint mismatch: hash {received.detector_fingerprint:#010x}, "
            f"receiver {expected:#010x}")


def recompute_from_keypoints(keypoints: list[KeyPoint], width: int, height: int,
                             received: ImageHash, dcfg: DetectorConfig,
                             kcfg: KMeansConfig) -> Recomputed:
    _check_config(received, dcfg, kcfg)
    if not keypoints:
        return Recomputed(None, 0, 0)
    result = lloyd(keypoint_locations(keypoints), received.centers, kcfg)
    h = ImageHash(result.centers, width, height, received.detector_fingerprint)
    return Recomputed(h, result.iterations, len(keypoints))


def recompute_hash(img: GrayImage, received: ImageHash, dcfg: DetectorConfig | None = None,
                   kcfg: KMeansConfig | None = None) -> Recomputed:
    """Detect keypoints on ``img`` and run Lloyd seeded at the received centers."""
    dcfg = dcfg or DetectorConfig()
    kcfg = kcfg or KMeansConfig(k=received.k)
    _check_config(received, dcfg, kcfg)
    return recompute_from_keypoints(detect_keypoints(img, dcfg), img.width, img.height,
                                    received, dcfg, kcfg)


def center_distances(sent: ImageHash, recomputed: ImageHash) -> np.ndarray:
    if sent.k != recomputed.k:
        raise DomainError(f"k mismatch: {sent.k} vs {recomputed.k}")
    # index-wise pairing: receiver center i descends from seed i
    return np.hypot(*(sent.centers - recomputed.centers).T)


def min_center_distance(sent: ImageHash, recomputed: ImageHash) -> float:
    return float(center_distances(sent, recomputed).min())


def decide(min_distance: float | None, threshold: float) -> str:
    # boundary counts as tampered
    if min_distance is None or not min_distance < threshold:
        return TAMPERED
    return AUTHENTIC


def report(received: ImageHash, recomputed: Recomputed, threshold: float) -> VerificationReport:
    if threshold <= 0:
        raise DomainError("threshold must be positive")
    if recomputed.degenerate:
        return VerificationReport(None, [], threshold, TAMPERED, True, 0)
    # both sides compared at wire precision so a float32 round trip is distance-neutral
    per_center = center_distances(received.quantized(), recomputed.hash.quantized())
    dmin = float(per_center.min())
    return VerificationReport(dmin, [float(d) for d in per_center], threshold,
                              decide(dmin, threshold), False, recomputed.iterations)


def verify(img: GrayImage, received: ImageHash, threshold: float = DEFAULT_THRESHOLD,
           dcfg: DetectorConfig | None = None,
           kcfg: KMeansConfig | None = None) -> VerificationReport:
    return report(received, recompute_hash(img, received, dcfg, kcfg), threshold)

"""Compact perceptual image hashes from clustered SURF keypoint locations."""

from .detector import DetectorConfig, KeyPoint, detect_keypoints
from .errors import (BoundsError, ConfigurationError, DomainError, HashFormatError,
                     HashGenerationError, ImageFormatError, SurfHashError)
from .hashing import ImageHash, decode_hash, encode_hash, generate_hash
from .image_io import GrayImage, load_grayscale
from .kmeans import KMeansConfig
from .verifier import DEFAULT_THRESHOLD, VerificationReport, verify

__version__ = "0.1.0"

__all__ = [
    "BoundsError", "ConfigurationError", "DEFAULT_THRESHOLD", "DetectorConfig", "DomainError",
    "GrayImage", "HashFormatError", "HashGenerationError", "ImageFormatError", "ImageHash",
    "KMeansConfig", "KeyPoint", "SurfHashError", "VerificationReport", "decode_hash",
    "detect_keypoints", "encode_hash", "generate_hash", "load_grayscale", "verify",
]

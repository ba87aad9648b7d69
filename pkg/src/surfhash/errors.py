class SurfHashError(Exception):
    """Base class for all errors raised by surfhash."""


class ImageFormatError(SurfHashError):
    """Image file could be read but is not a supported PNG/JPEG."""


class HashFormatError(SurfHashError):
    """Serialized hash bytes are malformed."""


class BoundsError(SurfHashError, IndexError):
    pass


class DomainError(SurfHashError, ValueError):
    pass


class ConfigurationError(SurfHashError):
    """Hash was produced with a different detector/clustering configuration."""


class HashGenerationError(SurfHashError):
    """The image is featureless: no keypoints were detected."""

"""Exception hierarchy shared by every srab module."""


class SrabError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SrabError, ValueError):
    """Raised when shapes, channel counts or parameters are inconsistent."""


class DataError(SrabError):
    """Raised for unreadable or malformed input data (images, weight files, reports)."""


class UnsupportedBitDepthError(DataError):
    pass


class WeightFileError(DataError):
    """Base class for weight-file decoding failures."""


class BadMagicError(WeightFileError):
    pass


class VersionMismatchError(WeightFileError):
    pass


class ShapeMismatchError(WeightFileError):
    pass


class TruncatedFileError(WeightFileError):
    pass


class EmptyRegionError(ConfigurationError):
    """Raised when a masked PSNR is requested over zero pixels."""

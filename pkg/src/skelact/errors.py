"""Exception types shared across the package."""


class SkelactError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SkelactError):
    """Array shapes are inconsistent with the network or data contract."""


class ZeroValidKeypoints(SkelactError):
    """A frame has no detected keypoints, so no centroid exists."""


class EmptyResult(SkelactError):
    """Interval splitting produced no sequence of usable length."""


class StaleCache(SkelactError):
    """A forward cache does not match the network it is replayed against."""


class TooFewClips(SkelactError):
    """A class has too few clips to populate every requested partition."""


class ParseError(SkelactError):
    """A file could not be parsed at all (malformed or truncated)."""


class SchemaError(SkelactError):
    """A parsed file violates the documented format invariants."""


class VersionError(SkelactError):
    """A file carries an unsupported format version."""


class UnknownLabel(SkelactError):
    """A label name or index is not part of the active label map."""


class EmptyMatrix(SkelactError):
    """An aggregate statistic was requested from an empty confusion matrix."""

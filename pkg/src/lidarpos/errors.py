"""Exception hierarchy shared by every stage of the localization pipeline."""

from __future__ import annotations


class LocalizationError(Exception):
    """Base class for all errors raised by this package."""


# geometry
class DegenerateAxis(LocalizationError):
    pass


class DegenerateColumns(LocalizationError):
    pass


class FrameMismatch(LocalizationError):
    pass


# horizontation
class NotAtStandstill(LocalizationError):
    pass


class BadGravity(LocalizationError):
    pass


class NonMonotonicTime(LocalizationError):
    pass


class StaleSample(LocalizationError):
    pass


# pointcloud
class UnsortedInput(LocalizationError):
    pass


# marker map / file parsing
class ParseError(LocalizationError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class DuplicateId(ParseError):
    pass


class MarkersTooClose(LocalizationError):
    pass


class NoMarkerInRange(LocalizationError):
    pass


class AmbiguousMatch(LocalizationError):
    pass


# estimator
class SameTimestamp(LocalizationError):
    pass


class NegativeDiscriminant(LocalizationError):
    pass


class SameMarker(LocalizationError):
    pass


class MarkerMismatch(LocalizationError):
    pass


class DegeneratePair(LocalizationError):
    pass


# simulator / evaluation
class InvalidConfig(LocalizationError):
    """Configuration rejected; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class EmptyEstimates(LocalizationError):
    pass


class TimeRangeMismatch(LocalizationError):
    pass

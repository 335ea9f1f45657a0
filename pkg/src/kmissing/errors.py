"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`KMError`,
so callers (and the CLI) can separate data/model failures from bugs.
"""

from __future__ import annotations


class KMError(Exception):
    """Base class for all package errors."""


# numerics
class NotPositiveDefinite(KMError):
    pass


class Singular(KMError):
    pass


class DimensionMismatch(KMError, ValueError):
    pass


# kernels
class DegenerateData(KMError):
    pass


# data
class ParseError(KMError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class SchemaViolation(KMError):
    pass


class EmptyFile(KMError):
    pass


class NonPositiveLog(KMError):
    pass


class ZeroVariance(KMError):
    pass


class BadSize(KMError):
    pass


# propensity / outcome
class AllObservedOrAllMissing(KMError):
    pass


class TooFewCompleteCases(KMError):
    pass


class RankDeficientBasis(KMError):
    pass


class SingleClass(KMError):
    pass


class NoConvergence(UserWarning):
    """Emitted (as a warning) when IRLS hits its iteration cap.

    The returned fit still carries the best iterate with ``converged=False``.
    """


# machines
class NoCompleteCases(KMError):
    pass


class BadGrid(KMError):
    pass


# simulate / bench
class BadSettingId(KMError):
    pass


class Empty(KMError):
    pass

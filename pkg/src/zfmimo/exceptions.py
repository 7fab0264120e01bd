"""Semantic exception hierarchy.

Every raise in the package goes through one of these so callers (and the
CLI exit-code mapping) can tell parameter misuse apart from numerical
trouble.
"""


class ZfMimoError(Exception):
    """Base class for all package errors."""


class ParameterError(ZfMimoError, ValueError):
    """An argument is outside its mathematical domain (e.g. snr <= 0)."""


class NumericalError(ZfMimoError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


class RankDeficiencyError(NumericalError):
    """A channel matrix is numerically rank deficient where full rank is required."""


class CapacityError(ZfMimoError, ValueError):
    """A request would exceed an explicit resource guard (e.g. codebook size)."""

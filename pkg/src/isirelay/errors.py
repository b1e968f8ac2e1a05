"""Exception hierarchy shared by every module."""


class RelayError(Exception):
    """Base class for all package errors."""


class InvalidBlockLength(RelayError, ValueError):
    """Block length too short for the channel memory."""


class IndefiniteNoise(RelayError, ValueError):
    """A noise spectrum value is not strictly positive.

    Attributes
    ----------
    band : int
        Zero-based index of the first offending band.
    value : float
        The offending spectral value.
    """

    def __init__(self, band: int, value: float):
        self.band = band
        self.value = value
        super().__init__(
            f"noise spectrum is not positive definite: band {band} has eigenvalue {value:.6g}"
        )


class NumericalRankError(RelayError, ValueError):
    """A covariance that must be positive definite is numerically singular."""


class DimensionMismatch(RelayError, ValueError):
    """Array lengths of a channel and an allocation disagree."""


class InvalidWaveform(RelayError, ValueError):
    """Signature cross-correlations give |rho(w)| > 1."""


class ConvergenceError(RelayError, RuntimeError):
    """An iterative solver failed to meet its tolerance.

    Attributes
    ----------
    bracket : tuple
        Last bracket or iterate history, for diagnostics.
    """

    def __init__(self, message: str, bracket=()):
        self.bracket = bracket
        super().__init__(f"{message}; last bracket {bracket}")

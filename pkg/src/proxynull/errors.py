"""Exception types shared across the package."""


class ProxyNullError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(ProxyNullError, ValueError):
    """Malformed or non-finite input data."""


class InvalidConfigError(ProxyNullError, ValueError):
    """Inconsistent or out-of-range configuration."""


class DegenerateBandwidthError(ProxyNullError, ValueError):
    """Bandwidth selection failed (e.g. all points identical)."""


class IllConditionedSystemError(ProxyNullError, RuntimeError):
    """Linear system remained numerically singular after jitter escalation.

    Attributes
    ----------
    condition : float
        Estimated condition number of the matrix that failed to factorize.
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class EstimationFailureError(ProxyNullError, RuntimeError):
    """Bridge estimation failed beyond recovery."""


class InsufficientDataError(ProxyNullError, ValueError):
    """Too few observations for the requested operation."""


class RankDeficientError(ProxyNullError, ValueError):
    """Design matrix lost full column rank.

    Attributes
    ----------
    rank : int
        Numerical rank actually found.
    """

    def __init__(self, message: str, rank: int = 0):
        super().__init__(message)
        self.rank = rank


class NoSolutionError(ProxyNullError, ValueError):
    """The requested closed form does not exist for these parameters."""


class UndefinedSolutionError(ProxyNullError, ValueError):
    """Closed-form coefficients are undefined (degenerate parameters)."""

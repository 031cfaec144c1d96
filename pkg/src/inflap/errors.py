"""Exception classes shared across the package."""


class InflapError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(InflapError, ValueError):
    """Argument outside the domain on which a function is defined."""


class InvariantViolation(InflapError, ValueError):
    """Input data or an intermediate iterate breaks a stated invariant."""


class UsageError(InflapError, ValueError):
    """Unknown identifier or incompatible arguments."""


class DivergentIntegral(InflapError):
    """A singular integral required to be finite diverges (or is not certified finite)."""


class ConvergenceFailure(InflapError, RuntimeError):
    """An iterative solver did not reach its tolerance.

    The last iterate, when available, is stored on ``last_iterate``.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NoBarrier(InflapError, RuntimeError):
    """The barrier construction exhausted its slope-shrinking budget."""


class NoValidRadius(InflapError):
    """The supersolution inequality fails already at the first interior node."""


class GluingError(InflapError):
    """Value or slope at a support edge does not vanish within tolerance."""


class GeometryError(InflapError, ValueError):
    """The support of a constructed profile does not fit the prescribed domain."""


class CriticalPointError(InflapError, ValueError):
    """The normalized operator was evaluated where the gradient vanishes."""

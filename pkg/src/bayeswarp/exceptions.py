"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`BayesWarpError`, so callers can catch the whole family at once.
"""


class BayesWarpError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BayesWarpError, ValueError):
    """Input arrays violate a documented precondition."""


class DegeneratePairError(BayesWarpError, ValueError):
    """Two points on the sphere are (numerically) antipodal."""


class DegenerateBasisError(BayesWarpError, ValueError):
    """Gram-Schmidt met a (numerically) linearly dependent input."""


class ConvergenceError(BayesWarpError, RuntimeError):
    """An iterative estimator hit its iteration cap.

    The last iterate is kept on ``last_iterate`` so that callers may still
    use it if they accept a looser tolerance.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InsufficientSupportError(BayesWarpError, RuntimeError):
    """Fewer finite-weight importance samples than requested resamples."""


class UndefinedDPDError(BayesWarpError, ValueError):
    """DPD requested for two SRSFs at zero distance."""

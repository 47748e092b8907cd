"""Exception hierarchy shared by all modules.

The command line maps :class:`AssumptionViolation` to exit status 2 and
every other :class:`SSPCError` to exit status 1.
"""


class SSPCError(Exception):
    """Base class for errors raised by this package."""


class EvaluationError(SSPCError):
    """A symbol or field evaluated to a non-finite value."""


class TruncationError(SSPCError):
    """A trajectory left the configured phase-space box."""

    def __init__(self, message, escape_time):
        super().__init__(message)
        self.escape_time = escape_time


class AssumptionViolation(SSPCError):
    """A structural hypothesis of the theory fails numerically."""


class OrderExceedsError(AssumptionViolation):
    """No nonvanishing bracket was found up to the requested order."""


class MonotonicityViolation(AssumptionViolation):
    """The evolved weight became positive."""


class CertificationError(AssumptionViolation):
    """A decay fit could not be carried out on the requested window."""


class BoundViolation(AssumptionViolation):
    """An implied constant exceeded its budget."""


class ConstructionError(AssumptionViolation):
    """A quasimode could not be built at the requested point."""


class ResolutionError(SSPCError):
    """A grid or basis is too coarse for the requested object."""


class UnsupportedModel(SSPCError):
    """The model or coefficient function is not supported by a builder."""


class NumericallySingular(SSPCError):
    """``zI - A`` is singular to working precision.

    ``lower_bound`` is a lower bound for the resolvent norm.
    """

    def __init__(self, message, lower_bound):
        super().__init__(message)
        self.lower_bound = lower_bound


class SpectrumError(SSPCError):
    """The eigensolver failed to converge."""


class SemigroupOverflow(SSPCError):
    """Propagator norms overflowed for a strongly non-accretive matrix."""


class QuadratureError(SSPCError):
    """Panel doubling did not converge."""


class ThresholdNotCrossed(SSPCError):
    """The resolvent stayed below the threshold over the whole search range."""

    def __init__(self, message, right_endpoint, value):
        super().__init__(message)
        self.right_endpoint = right_endpoint
        self.value = value

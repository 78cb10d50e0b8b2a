"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`LeakageError`.
The CLI maps the mid-level families onto exit codes: unreadable input (2),
validation problems (3), domain problems (4) and solver failures (5).
"""


class LeakageError(Exception):
    """Base class for all package errors."""


class ParseError(LeakageError, ValueError):
    """Input file is not well-formed JSON or lacks required fields."""


class ValidationError(LeakageError, ValueError):
    """Input data does not describe a valid object."""


class DomainError(LeakageError, ValueError):
    """Parameters are valid objects but outside the operation's domain."""


class SolverError(LeakageError, RuntimeError):
    """An iterative or combinatorial solver did not finish."""


# -- distribution validation -------------------------------------------------

class NegativeProbability(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class EmptyAlphabet(ValidationError):
    pass


class LabelMismatch(ValidationError):
    pass


class AllMassOutOfSupport(ValidationError):
    pass


class SizeCapExceeded(DomainError):
    pass


# -- operation domains --------------------------------------------------------

class InvalidParameter(DomainError):
    pass


class ParameterOutOfRange(DomainError):
    pass


class DeltaOutOfRange(DomainError):
    pass


class KTooLarge(DomainError):
    pass


class ZeroGain(DomainError):
    pass


class DegenerateMinSum(DomainError):
    """The column minima sum to zero, so cost leakage is infinite."""


class EmptySample(DomainError):
    pass


class Infeasible(DomainError):
    pass


class UnstableQueue(DomainError):
    pass


class InfeasibleRate(UserWarning):
    """Warning: the channel rate cannot carry the worst admissible type."""


# -- solvers ------------------------------------------------------------------

class MaxIterExceeded(SolverError):
    """Iteration budget exhausted.

    Attributes
    ----------
    value : float
        Best iterate found so far.
    gap : float
        Width of the certificate bracket at the best iterate.
    """

    def __init__(self, message, value=float("nan"), gap=float("inf")):
        super().__init__(message)
        self.value = value
        self.gap = gap


class SolverStalled(SolverError):
    def __init__(self, message, value=float("nan"), gap=float("inf")):
        super().__init__(message)
        self.value = value
        self.gap = gap


class CoverageFailure(SolverError):
    pass

"""Exception hierarchy shared by every module of the package."""


class FinslerError(Exception):
    """Base class for all errors raised by cfinsler."""


class MetricParseError(FinslerError):
    """Raised when a metric source cannot be turned into an expression tree."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class MetricSyntaxError(MetricParseError):
    pass


class UnknownIdentifierError(MetricParseError):
    pass


class IndexRangeError(MetricParseError):
    pass


class ArityError(MetricParseError):
    pass


class CatalogError(FinslerError):
    """Unknown builtin name or a dimension the builtin does not support."""


class DomainError(FinslerError):
    """Evaluation left the domain where the metric is defined."""

    def __init__(self, message, sample=None):
        self.sample = sample
        super().__init__(message)


class SingularLevi(FinslerError):
    """The Levi matrix is not (numerically) positive definite at a site."""

    def __init__(self, message, min_eigenvalue=None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


class InternalConsistencyError(FinslerError):
    """Two independent evaluation routes of the same quantity disagree."""


class PreconditionError(FinslerError, ValueError):
    pass


class StepFailure(FinslerError):
    """The ODE integrator could not advance (stiffness or blow-up)."""


class DomainExit(FinslerError):
    """An integrated curve left the chart domain of the metric."""

    def __init__(self, message, s=None):
        self.s = s
        super().__init__(message)


class HypothesesNotEstablished(FinslerError):
    pass


class ClassificationAborted(FinslerError):
    pass

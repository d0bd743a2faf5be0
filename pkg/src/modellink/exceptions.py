"""Exception hierarchy shared across modellink."""


class ModelLinkError(Exception):
    """Base class for all package errors."""


class ValidationError(ModelLinkError, ValueError):
    """Malformed user input (graphs, data, configs)."""


class GraphError(ValidationError):
    pass


class OutOfRangeSlot(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class InvalidLearner(GraphError):
    pass


class ShapeError(ValidationError):
    pass


class DomainError(ValidationError):
    """A natural-coordinate parameter lies outside its constraint set."""


class BoundaryValue(DomainError):
    """A parameter sits exactly on the boundary of its constraint set."""


class UnassignedSlot(ValidationError):
    pass


class PriorConflict(ValidationError):
    """Tied slots were declared with different priors."""


class UnsupportedFamily(ModelLinkError):
    pass


class UnsupportedRule(ModelLinkError):
    pass


class NumericalError(ModelLinkError):
    """Base class for numerical failures (exit code 2 in the CLI)."""


class FitFailure(NumericalError):
    pass


class SingularHessian(FitFailure):
    pass


class NonConvergence(FitFailure):
    pass


class NotConverged(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class TooLarge(ModelLinkError):
    pass


class InsufficientRows(ValidationError):
    pass


class SchemaMismatch(ValidationError):
    pass

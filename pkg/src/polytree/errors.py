"""Exception types shared across the package."""


class PolytreeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGraph(PolytreeError, ValueError):
    pass


class NotAPolytree(PolytreeError, ValueError):
    pass


class InvalidCpdag(PolytreeError, ValueError):
    pass


class LimitExceeded(PolytreeError):
    pass


class OrientationConflict(PolytreeError):
    """An edge was demanded in both directions."""

    def __init__(self, edge, message=None):
        self.edge = edge
        super().__init__(message or f"edge {edge[0]}--{edge[1]} demanded in both directions")


class SingularModel(PolytreeError, ValueError):
    pass


class InvalidModel(PolytreeError, ValueError):
    pass


class EmptyGraph(PolytreeError, ValueError):
    pass


class InfeasibleDegree(PolytreeError, ValueError):
    pass


class InfeasibleConfig(PolytreeError, ValueError):
    pass


class InvalidRho(PolytreeError, ValueError):
    pass


class ConstantColumn(PolytreeError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero empirical variance")


class InsufficientSamples(PolytreeError, ValueError):
    pass


class DegenerateVariance(PolytreeError, ValueError):
    def __init__(self, node, value):
        self.node = node
        self.value = value
        super().__init__(f"estimated variance term for node {node} is non-positive ({value:.3g})")


class DimensionMismatch(PolytreeError, ValueError):
    pass


class EmptyEstimate(PolytreeError, ZeroDivisionError):
    pass


class EmptyUnion(PolytreeError, ZeroDivisionError):
    pass


class FormatError(PolytreeError, ValueError):
    """Malformed graph, SEM, data or config file."""

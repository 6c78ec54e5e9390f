"""Exception types shared across the package."""


class SeaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SeaError):
    pass


class ZeroDegreeNode(SeaError):
    """A graph node has zero (weighted) degree where a positive one is required."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"node {node} has zero degree")


class NoConvergence(SeaError):
    """An iterative solve hit its iteration cap before reaching tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class OracleScaleExceeded(SeaError):
    pass


class InvalidK(SeaError):
    pass


class DegenerateFeatures(SeaError):
    pass


class SubspaceTooLarge(SeaError):
    pass


class NodeOutOfRange(SeaError):
    pass


class EmptyEdgeSet(SeaError):
    pass


class InvalidFraction(SeaError):
    pass


class ShapeMismatch(SeaError):
    pass


class NonFiniteLoss(SeaError):
    pass


class EmptyMask(SeaError):
    pass


class MalformedRow(SeaError):
    """A dataset text row failed to parse; carries file and line diagnostics."""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class ClassTooSmall(SeaError):
    pass


class TopologyViolation(SeaError):
    pass


class ConfigMismatch(SeaError):
    pass


class MissingRuns(SeaError):
    pass


class ConfigError(SeaError):
    pass


class CorruptCache(SeaError):
    """A cached dataset container failed its checksum."""


class UnknownNodeIdWarning(UserWarning):
    """Citation rows referencing paper ids absent from the content file."""


class IsolatedNodeWarning(UserWarning):
    """A node with no neighbors was given a zero aggregate."""

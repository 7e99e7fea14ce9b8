"""Exception types shared across the package."""


class CellMotionError(Exception):
    """Base class for all package-specific errors."""


class ShapeOutsideBox(CellMotionError):
    """Initial shape is not strictly inside the computational box."""


class RegionTouchesBoundary(CellMotionError):
    """The cell region reaches the edge of the computational box."""


class SolverDiverged(CellMotionError):
    """A linear solve failed to reach its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NotConverged(CellMotionError):
    """An iterative procedure (e.g. fast sweeping) exhausted its passes."""


class NoInteriorData(CellMotionError):
    """An interface point has no interior cell data within reach."""


class IsolatedNewCell(CellMotionError):
    """A newly covered cell has no previously valid neighbor to extrapolate from."""


class DisconnectedCell(CellMotionError):
    """The positive-area cells do not form a single connected region."""


class EmptyRegion(CellMotionError):
    """The cell region has zero area."""


class CellLargerThanBox(CellMotionError):
    """The cell does not fit in the computational box with the required margin."""


class TooShort(CellMotionError):
    """A trajectory series is too short to classify."""


class ParseError(CellMotionError):
    """Malformed configuration input."""

    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(CellMotionError):
    """Configuration parsed but violates one or more constraints."""

    def __init__(self, violations):
        super().__init__("invalid configuration:\n  " + "\n  ".join(violations))
        self.violations = list(violations)


class FormatError(CellMotionError):
    """Malformed snapshot or timeseries file."""


class DimensionMismatch(CellMotionError):
    """Snapshot dimensions do not match the expected grid."""

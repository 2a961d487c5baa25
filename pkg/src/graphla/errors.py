"""Exception hierarchy shared across the package."""


class GraphlaError(Exception):
    """Base class for all package errors."""


class ZeroVariance(GraphlaError, ValueError):
    pass


class MalformedHeader(GraphlaError, ValueError):
    pass


class DimensionMismatch(GraphlaError, ValueError):
    pass


class IoFailure(GraphlaError, OSError):
    pass


class OutOfBounds(GraphlaError, IndexError):
    pass


class WaveletTooLong(GraphlaError, ValueError):
    pass


class DegenerateSpectrum(GraphlaError, ValueError):
    pass


class NonFinite(GraphlaError, ArithmeticError):
    pass


class SolverStalled(GraphlaError, RuntimeError):
    pass


class AllFlatTruth(GraphlaError, ValueError):
    pass


class GridTooSmall(GraphlaError, ValueError):
    pass


class IdenticalInputs(GraphlaError, ValueError):
    pass


class StageError(GraphlaError):
    """Wraps an error raised inside a pipeline stage with a stage label."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")

"""Error types shared by services and the command line.

Each error carries the process exit code the CLI reports for it.
"""


class JmgtLabError(Exception):
    """Base class for all jmgtlab errors."""

    exit_code = 1


class ConfigError(JmgtLabError):
    """Invalid or incomplete experiment configuration."""

    exit_code = 2


class ArgumentError(JmgtLabError, ValueError):
    """Unsupported argument value passed to a service."""

    exit_code = 2


class ShapeError(JmgtLabError, ValueError):
    """Field dimensions do not match the owning grid."""

    exit_code = 2


class GeometryError(JmgtLabError):
    """Invalid probe or domain geometry."""

    exit_code = 2


class InsufficientDataError(JmgtLabError):
    """Too few time levels for the requested finite differences."""

    exit_code = 2


class ResolutionError(JmgtLabError):
    """Grid does not resolve the requested frequency."""

    exit_code = 3

    def __init__(self, message: str, required: dict[str, int] | None = None):
        super().__init__(message)
        self.required = required or {}


class HypothesisViolationError(JmgtLabError):
    """A hypothesis of the model (support, bound, asymptotics) does not hold."""

    exit_code = 4


class SolverFailureError(JmgtLabError):
    """Singular linear system during time stepping."""

    exit_code = 5

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class DivergenceError(JmgtLabError):
    """Non-finite values or a fixed-point iteration that did not converge."""

    exit_code = 5

    def __init__(self, message: str, step: int | None = None, report=None):
        super().__init__(message)
        self.step = step
        self.report = report


class AmplitudeRangeError(JmgtLabError):
    """Amplitude exponent outside the representable double range."""

    exit_code = 5


class RegularizationError(JmgtLabError):
    """Least-squares system cannot be solved without regularization."""

    exit_code = 5


class DataError(JmgtLabError):
    """A measurement record lacks a required component."""

    exit_code = 5

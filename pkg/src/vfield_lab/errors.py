"""Exception hierarchy shared by the numerical modules and the CLI."""


class VFieldError(Exception):
    """Base class for all errors raised by vfield_lab."""

    exit_code = 1


class ConfigError(VFieldError):
    exit_code = 2


class EvaluationError(VFieldError):
    """A derivative or curvature evaluated to a non-finite value."""

    exit_code = 3


class PoleProximityError(EvaluationError):
    """A finite-difference stencil or trace left the punctured sphere."""


class StepCollapseError(EvaluationError):
    """Adaptive step control underflowed."""


class ConvergenceError(VFieldError):
    exit_code = 3


class InvariantViolation(VFieldError):
    exit_code = 4

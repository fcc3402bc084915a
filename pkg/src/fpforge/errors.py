"""Structured errors shared across the package."""


class FpforgeError(Exception):
    """Base class for all structured fpforge errors."""


class InvalidSpace(FpforgeError):
    """Malformed grid, values, or norm descriptor."""


class GridMismatch(FpforgeError):
    """Operands live on different grids or have different dimensions."""


class InvalidProblem(FpforgeError):
    """Problem data violates a declared hypothesis (signs, ranges, growth)."""


class DegenerateAngle(FpforgeError):
    """Angle requested for a zero vector; the angle is defined only for nonzero arguments."""


class NoEpsilon0(FpforgeError):
    """Convexity profile too flat: no angle budget on (0, 4] forces the midpoint bound."""


class NotAContraction(FpforgeError):
    """Declared Lipschitz factor is >= 1, or the observed rate contradicts it."""


class NoConvergence(FpforgeError):
    """Iteration budget exhausted before the residual tolerance was met."""

    def __init__(self, message, residual=None, report=None):
        super().__init__(message)
        self.residual = residual
        self.report = report


class ContinuationStalled(FpforgeError):
    """A continuation stage failed; carries the stages completed so far."""

    def __init__(self, message, stage_lambda=None, completed=None, cause=None):
        super().__init__(message)
        self.stage_lambda = stage_lambda
        self.completed = completed or []
        self.cause = cause


class BlowupBeforeT(FpforgeError):
    """The growth bound cannot be continued to the end of the interval."""

    def __init__(self, message, node_index=None, node_time=None):
        super().__init__(message)
        self.node_index = node_index
        self.node_time = node_time


class CertificateRequired(FpforgeError):
    """A prerequisite certificate failed and no override was given."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class InvariantBallViolated(FpforgeError):
    """Final iterate left the certified invariant ball."""

    def __init__(self, message, certificate=None, observed=None):
        super().__init__(message)
        self.certificate = certificate
        self.observed = observed


class ConfigError(FpforgeError):
    """One or more configuration problems; collects every message, not just the first."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))

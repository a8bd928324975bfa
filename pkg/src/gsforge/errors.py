"""Exception hierarchy shared by every gsforge module."""


class GSForgeError(Exception):
    """Base class for all library errors."""


class PreconditionError(GSForgeError, ValueError):
    """An input violates a documented precondition."""


class ContourError(GSForgeError):
    """A level set is empty, open, or has more than one component."""


class ConvergenceError(GSForgeError):
    """An iteration failed to reach its tolerance."""

    def __init__(self, message, *, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NeumannDivergenceError(ConvergenceError):
    """The coil Neumann series cannot converge (operator estimate >= 1)."""

    def __init__(self, message, *, operator_norm):
        super().__init__(message)
        self.operator_norm = operator_norm


class ConditioningError(GSForgeError):
    """1 - |G'|^2 came too close to zero for the Picard update."""


class DegenerateFieldError(GSForgeError, ValueError):
    """The field is constant (no critical structure to analyse)."""


class IncompatibleProfilesError(GSForgeError, ValueError):
    """Axisymmetric profiles cannot satisfy the induction closure."""


class DomainError(GSForgeError, ValueError):
    """Evaluation requested outside the region where a representation holds."""


class NearSingularError(GSForgeError, ValueError):
    """Evaluation point lies (numerically) on a current sheet."""


class FibrationError(GSForgeError, ValueError):
    """A transverse ray fails to cross every level set exactly once."""

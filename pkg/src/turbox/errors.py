"""Exception types shared across the library."""


class TurboxError(Exception):
    """Base class for all library errors."""


class ValidationError(TurboxError, ValueError):
    """Bad input data or configuration (nothing was computed)."""


class SingularityError(TurboxError, ValueError):
    """Evaluation requested exactly at a pole (e.g. g/Delta_f at eps0)."""


class FeasibilityError(TurboxError, ValueError):
    """Target lies outside the feasible set.

    `boundary` names the violated constraint, e.g. "I_max" or "J_min(I)".
    """

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class ConvergenceError(TurboxError, RuntimeError):
    """An iteration budget was exhausted.

    `estimate` carries the best available error estimate or iterate.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(TurboxError, RuntimeError):
    """Root bracketing / scan failure, with diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NearBifurcationError(TurboxError, RuntimeError):
    """Jacobian requested at a near-double root; caller should perturb."""


class FormulaMismatchError(TurboxError, RuntimeError):
    """A closed-form expression disagrees with its defining integrals."""

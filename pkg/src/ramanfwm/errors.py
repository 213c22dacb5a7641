"""Exception hierarchy.  Validation errors map to CLI exit code 2, numerical ones to 3."""


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class GridMismatchError(ValidationError):
    """A grid is incompatible with the sampled response or another grid."""


class NumericalError(RuntimeError):
    """A computation ran but its result cannot be trusted."""


class StepRejectedError(NumericalError):
    """A propagation step exceeded the per-step nonlinear phase budget."""


class AliasingError(NumericalError):
    """Spectral content reached the edge of the grid."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to converge."""

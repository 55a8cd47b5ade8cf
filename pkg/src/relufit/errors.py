"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of sweeps.

    Carries the final off-diagonal residual so callers can report how far
    from converged the iteration stopped.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class InsufficientDataError(ValueError):
    """Too few samples for the requested operation."""


class FitError(ValueError):
    """Regression input does not determine a fit."""


class ConfigError(ValueError):
    """A config file is missing keys or holds values of the wrong type."""

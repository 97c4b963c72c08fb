"""Exception types shared across the solver stack."""


class GradflowError(Exception):
    """Base class for all gradflow errors."""


class SizeMismatch(GradflowError):
    """Two fields or operators live on different grids."""


class MeanNotZero(GradflowError):
    """A field that must lie in the zero-mean subspace does not."""


class EnergyShiftViolation(GradflowError):
    """The shifted energy E + C (or E1 + C) is not positive."""


class NumericalBlowup(GradflowError):
    """A field became non-finite or exceeded the blowup threshold."""

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class NegativeDiscriminant(GradflowError):
    """The scalar quadratic for the auxiliary variable has no real root."""


class SolverStall(GradflowError):
    """An iterative linear solve failed to reach its residual target."""


class ConfigError(GradflowError):
    """A configuration file failed to parse or validate."""

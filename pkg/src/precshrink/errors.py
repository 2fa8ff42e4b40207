"""Exception types shared across the package."""


class NumericError(Exception):
    """Base class for numerical failures (singularity, non-convergence, ...)."""


class SingularMatrixError(NumericError):
    """A matrix that must be invertible is numerically singular."""


class DegenerateTargetError(NumericError):
    """The shrinkage target is numerically proportional to the sample inverse."""


class NearSingularRegimeError(NumericError):
    """p/n falls inside the near-singular band where no estimator theory applies."""


class ConvergenceError(NumericError):
    """An iterative solver failed to reach the requested tolerance."""


class UndefinedPrialError(NumericError):
    """PRIAL is undefined because the baseline loss is zero."""


class RegimeError(ValueError):
    """An operation was invoked for the wrong p/n regime."""


class ConfigError(ValueError):
    """An experiment configuration or input file could not be parsed."""

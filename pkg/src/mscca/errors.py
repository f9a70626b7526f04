"""Exception types raised by the mscca toolkit."""


class MsccaError(Exception):
    """Base class for all toolkit errors."""


class ConstantColumn(MsccaError):
    """A data column has zero variance and cannot be standardized."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance")


class DimensionMismatch(MsccaError):
    """Vector or matrix dimensions do not match the expected layout."""


class DegenerateThreshold(MsccaError):
    """Soft-threshold level is at or above the largest magnitude entry."""


class ZeroTarget(MsccaError):
    """Projection target is the zero vector."""


class InvalidBound(MsccaError):
    """l1 bound outside the admissible range [1, sqrt(p)]."""


class DegenerateDenominator(MsccaError):
    """Quadratic form in the within-block covariance is numerically zero."""


class InfeasibleStart(MsccaError):
    """Initial direction violates the starting l1 bound."""


class EmptyTrajectory(MsccaError):
    """Iterate selection requires a non-empty trajectory."""


class TooFewSamples(MsccaError):
    """Not enough samples for the requested number of folds."""


class DegenerateScore(MsccaError):
    """Aggregated score X @ beta is numerically zero; cannot deflate."""


class DegenerateQuadraticForm(MsccaError):
    """beta' Sigma beta is numerically zero in Schur deflation."""


class CholeskyFailure(MsccaError):
    """Shrunk within-block covariance is singular even at full shrinkage."""


class NotPSD(MsccaError):
    """Assembled population covariance failed Cholesky after retries."""

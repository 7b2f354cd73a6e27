"""Exception hierarchy shared by the library and the command line front end.

The CLI maps these onto exit codes: :class:`ConfigurationError` is a usage
problem (exit 2), :class:`DataError` covers bad input files or values
(exit 3), and :class:`EstimatorError` covers numeric failures inside the
estimators (exit 4).
"""


class RegpcaError(Exception):
    """Base class for every error raised by this package."""


class DataError(RegpcaError, ValueError):
    """Input data is unusable: non-finite values, bad files, bad shapes."""


class InvalidInputError(DataError):
    """A matrix argument violates a basic precondition."""


class ParseError(DataError):
    """A delimited text file could not be parsed."""


class FormatError(DataError):
    """An image file does not follow the expected format."""


class ShapeError(DataError):
    """Two arrays that must agree in shape do not."""


class ConfigurationError(RegpcaError, ValueError):
    """A simulation or CLI parameter combination is infeasible."""


class EstimatorError(RegpcaError, ValueError):
    """Base class for numeric failures inside an estimator."""


class RankError(EstimatorError):
    """A requested rank exceeds what the decomposition supports."""


class InvalidWeightError(EstimatorError):
    """A reconstruction weight is outside [0, 1] or not finite."""


class DegreesOfFreedomError(EstimatorError):
    """The residual-variance denominator is not positive."""


class ZeroEigenvalueError(EstimatorError):
    """A shrinkage factor is undefined because an eigenvalue is zero."""


class InvalidThresholdError(EstimatorError):
    """A soft-threshold constant is negative."""


class InvalidGridError(EstimatorError):
    """A threshold-selection grid is empty."""


class NonPositiveLoadingError(EstimatorError):
    """The latent-variable loadings would be imaginary (eigenvalue <= noise)."""


class InvalidSignalError(EstimatorError):
    """A simulated signal is identically zero."""


class EmptyConfigurationError(EstimatorError):
    """A coordinate configuration was requested from a rank-0 result."""


class DegenerateReferenceError(EstimatorError):
    """A Procrustes reference has no spread around its centroid."""

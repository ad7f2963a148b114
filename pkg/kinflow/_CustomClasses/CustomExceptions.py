class KinflowError(Exception):
    """base class for every error raised by kinflow"""


class ConfigError(KinflowError, ValueError):
    """raised when an experiment config has unknown keys or values outside a precondition"""


class ShapeMismatch(KinflowError, ValueError):
    """raised when a field or path does not fit the grid or the time lattice"""


class DiscretizationError(KinflowError):
    """raised when the discretization itself is defective (CFL, empty re-emission set, stalled stationary iteration)"""


class RegimeViolation(KinflowError):
    """raised when an observed contraction ratio reaches 1 or lambda leaves its certified regime"""


class ConvergenceFailure(KinflowError):
    """raised when an iteration hits its cap before reaching the tolerance"""


class PositivityViolation(KinflowError, ValueError):
    """raised when a backward spectral flow leaves the nonnegative cone or its normalizer is not positive"""


class SupportExit(KinflowError):
    """raised when a chart point or its orbit leaves the support of the ensemble density"""


class SamplingError(KinflowError):
    """raised when rejection sampling accepts less than 1% of its proposals"""

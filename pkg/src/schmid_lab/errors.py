"""Exception types raised by the library."""


class SchmidLabError(Exception):
    """Base class for all library errors."""


class MoreThanOneZeroMode(SchmidLabError):
    pass


class NotConverged(SchmidLabError):
    """Iterative solver stopped before reaching the requested tolerance.

    The best available Ritz pairs are attached for diagnosis.
    """

    def __init__(self, message, eigenvalues=None, eigenvectors=None, residuals=None, iterations=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        self.residuals = residuals
        self.iterations = iterations


class TruncationTooSmall(SchmidLabError):
    pass


class CapacityOverflow(SchmidLabError):
    pass


class DimensionMismatch(SchmidLabError):
    pass


class GroundMissing(SchmidLabError):
    pass


class NoCrossing(SchmidLabError):
    pass


class ConfigError(SchmidLabError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key

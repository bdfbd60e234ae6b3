"""Exception types shared across the package."""


class SurfStokesError(Exception):
    """Base class for errors raised by this package."""


class ConvergenceError(SurfStokesError):
    """An iterative solver failed to reach its tolerance.

    Carries the achieved residual and the iteration count so callers can
    report how far the solve got.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SpectralGapError(SurfStokesError):
    """Eigenvalue clustering is too ambiguous to separate a kernel."""


class ConfigError(SurfStokesError):
    """A configuration file or parameter set is invalid."""


class SimulationAborted(SurfStokesError):
    """A time step failed; the partial trajectory is attached."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory

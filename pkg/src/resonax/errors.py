"""Exception hierarchy shared by all resonax modules."""


class ResonaxError(Exception):
    """Base class for all library errors."""


class GeometryError(ResonaxError):
    """Invalid domain description, empty mesh, or overlapping meshes."""


class KernelError(ResonaxError):
    """Kernel evaluated at a singular point or with an invalid kind."""


class PoleError(ResonaxError):
    """Evaluation at (or numerically too close to) an excitonic pole."""


class ConvergenceError(ResonaxError):
    """Iterative solver failed; carries the best iterate found so far."""

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class NoPhysicalRootError(ResonaxError):
    """The resonance condition has no root with positive real part."""


class ConfigError(ResonaxError):
    """Invalid run configuration; message aggregates all problems found."""

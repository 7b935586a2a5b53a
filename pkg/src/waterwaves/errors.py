"""Exception types shared across the package."""


class WaterWaveError(Exception):
    """Base class for all errors raised by :mod:`waterwaves`."""


class NumericalAbort(WaterWaveError):
    """A run cannot continue from the current state."""


class StripViolation(NumericalAbort):
    """The free surface touches (or comes too close to) the flat bottom."""

    def __init__(self, strip_height, required=0.0):
        self.strip_height = float(strip_height)
        self.required = float(required)
        super().__init__(
            f"strip height {self.strip_height:.6g} does not exceed the "
            f"required margin {self.required:.6g}"
        )


class SeparationViolation(NumericalAbort):
    """The straightening map fails its lower bound on d(rho)/dz."""

    def __init__(self, minimum, bound):
        self.minimum = float(minimum)
        self.bound = float(bound)
        super().__init__(
            f"min dz(rho) = {self.minimum:.6g} is below the bound {self.bound:.6g}"
        )


class NoConvergence(NumericalAbort):
    """Conjugate gradient stopped before reaching the requested tolerance."""

    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"CG did not converge after {self.iterations} iterations "
            f"(relative residual {self.residual:.3e})"
        )


class ConfigError(WaterWaveError):
    """Base class for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    def __init__(self, line, key, reason="unknown key"):
        self.line = line
        self.key = key
        self.reason = reason
        super().__init__(f"line {line}: {reason}: {key!r}")


class ValidationError(ConfigError):
    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class InsufficientSnapshots(WaterWaveError):
    def __init__(self, found, needed=3):
        self.found = found
        self.needed = needed
        super().__init__(f"need at least {needed} snapshots, found {found}")


class GridMismatch(WaterWaveError):
    """Two fields or snapshots live on different grids."""

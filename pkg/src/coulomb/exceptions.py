class CoulombError(Exception):
    """Base class for errors raised by this package."""


class AdmissibilityError(CoulombError, ValueError):
    """The potential is not quasi-subharmonic on the grid."""

    def __init__(self, min_density: float):
        self.min_density = float(min_density)
        super().__init__(
            f"potential is not admissible: min of 1 + Lap V / 4pi is {self.min_density:.6g}"
        )


class ConditioningError(CoulombError, ArithmeticError):
    """A numerical result failed its self-consistency check."""


class ConfigError(CoulombError, ValueError):
    """Invalid run configuration."""

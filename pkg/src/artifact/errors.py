"""Exception types shared by the theory engines, the simulator and the CLI."""


class ArtifactError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 1


class ConfigError(ArtifactError, ValueError):
    """Malformed or inconsistent configuration."""

    exit_code = 2


class DomainError(ArtifactError, ValueError):
    """Inputs outside the domain where a formula is defined."""

    exit_code = 3


class ThresholdError(DomainError):
    """Ridgeless evaluation at (or inside the guard band around) p = n or d = n."""

    exit_code = 3


class ConvergenceError(ArtifactError, ArithmeticError):
    """A root finder or linear solve failed to produce a trustworthy answer."""

    exit_code = 4

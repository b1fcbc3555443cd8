"""Exception hierarchy shared by all droplet modules."""


class DropletError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(DropletError, ValueError):
    """Invalid shape data: odd/short grids, loss of star-shapedness."""


class SolverError(DropletError):
    """The harmonic collocation solve failed or is untrustworthy."""


class IllConditionedDomainError(SolverError):
    """Collocation residual too large for the global harmonic basis."""


class ContactLawError(DropletError, ValueError):
    """Contact law violates F(1) = 0 / F' > 0, or is evaluated out of range."""


class DecompositionError(DropletError):
    """Newton iteration for the (v, rho_bar) coordinates did not converge."""


class ConfigError(DropletError, ValueError):
    """Experiment configuration failed validation."""

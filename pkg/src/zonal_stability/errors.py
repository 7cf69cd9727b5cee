"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the function is defined."""


class ResonanceError(ValueError):
    """The potential denominator 15 s^2 - 3 + mu vanishes on the open interval."""


class ConfigError(ValueError):
    """A discretization setting is unusable."""


class SingularIntegrandError(ValueError):
    """An energy-form integrand is not integrable (no cancelling zero)."""

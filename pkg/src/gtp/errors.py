"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class CapacityError(ValueError):
    """A requested degree exceeds the supported cap."""


class NumericalConsistencyError(ArithmeticError):
    """A computed quantity violated an internal consistency check."""


class DegenerateEdgeError(DomainError):
    """Edge endpoints are too close to define a direction."""


class CacheFormatError(ValueError):
    """A coefficient cache file is malformed or stale."""

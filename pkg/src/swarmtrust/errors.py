"""Exception types shared across the package."""


class SwarmTrustError(Exception):
    """Base class for all package errors."""


class InputError(SwarmTrustError):
    """Invalid argument or malformed input data."""


class DomainError(SwarmTrustError):
    """Mathematically undefined request (e.g. tau over an empty domain)."""


class RankDeficiencyError(SwarmTrustError):
    """Observability window lacks full column rank."""

    def __init__(self, message, deficiency):
        super().__init__(message)
        self.deficiency = deficiency


class FloodingStallError(SwarmTrustError):
    """Adjacency flooding hit the round cap with unfilled rows; the partial
    per-robot matrices are attached."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class SingularityError(SwarmTrustError):
    """Coincident robot positions in an avoidance/matching denominator."""


class InfeasibleTrackingError(SwarmTrustError):
    """Target speed at or above the robots' velocity cap."""

"""Sybil-resilient multi-robot trust, estimation, consensus, and flocking.

Deterministic, seedable simulation library with an experiment CLI. Hot
kernels are numba-compiled with a pure-numpy fallback selected by the
SWARMTRUST_DISABLE_NUMBA environment variable.
"""
from swarmtrust.accel import USE_NUMBA
from swarmtrust.errors import (DomainError, FloodingStallError,
                               InfeasibleTrackingError, InputError,
                               RankDeficiencyError, SingularityError,
                               SwarmTrustError)
from swarmtrust.threat import (DISTRUST, NO_DATA, TRUST, AdversaryStrategy,
                               ObservationChannel)
from swarmtrust.topology import (CommGraph, Role, RoleAssignment,
                                 complete_world, fixture_graph, min_tau)
from swarmtrust.trust import (TrustVector, World, find_spoofed_robots,
                              rounds_bound_baseline, rounds_bound_theorem1,
                              success_rate)

__version__ = "0.1.0"

__all__ = [
    "AdversaryStrategy", "CommGraph", "DISTRUST", "DomainError",
    "FloodingStallError", "InfeasibleTrackingError", "InputError",
    "NO_DATA", "ObservationChannel", "RankDeficiencyError", "Role",
    "RoleAssignment", "SingularityError", "SwarmTrustError", "TRUST",
    "TrustVector", "USE_NUMBA", "World", "complete_world",
    "find_spoofed_robots",
    "fixture_graph", "min_tau", "rounds_bound_baseline",
    "rounds_bound_theorem1", "success_rate",
]

"""Observation channel synthesis and adversary behavioral strategies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from swarmtrust.errors import InputError
from swarmtrust.topology import CommGraph, Role, RoleAssignment

EPS_MIN = 1e-3
EPS_MAX = 0.499

TRUST = 1
DISTRUST = 0
NO_DATA = -1

HIDDEN_POLICIES = ("random", "inverted")


def _looks_legitimate(role: Role) -> bool:
    # hidden adversaries transmit with legitimate-looking signatures
    return role in (Role.LEGITIMATE, Role.HIDDEN)


@dataclass(frozen=True)
class ObservationChannel:
    """Per-message trust observation source.

    Bernoulli mode emits {0,1} with mean 1/2+eps for legitimate-looking
    senders and 1/2-eps for detectable ones. Continuous mode emits Beta
    samples with the same means and the given concentration. epsilon is
    clamped to [1e-3, 0.499] to keep the channel non-degenerate.
    """
    epsilon: float
    mode: str = "bernoulli"
    concentration: float = 8.0

    def __post_init__(self):
        if self.mode not in ("bernoulli", "beta"):
            raise InputError(f"unknown channel mode {self.mode!r}")
        if self.concentration <= 0:
            raise InputError("concentration must be positive")
        object.__setattr__(
            self, "epsilon", float(np.clip(self.epsilon, EPS_MIN, EPS_MAX)))

    def mean_for(self, role: Role) -> float:
        if _looks_legitimate(role):
            return 0.5 + self.epsilon
        return 0.5 - self.epsilon

    def sample(self, role: Role, rng: np.random.Generator, size=None):
        """Draw observation values for a sender of the given role."""
        mu = self.mean_for(role)
        if self.mode == "bernoulli":
            out = np.asarray(rng.random(size) < mu, dtype=np.float64)
            return float(out) if size is None else out
        a = mu * self.concentration
        b = (1.0 - mu) * self.concentration
        out = rng.beta(a, b, size=size)
        return float(out) if size is None else out

    def sample_round_sums(self, roles: np.ndarray, r: int,
                          rng: np.random.Generator, shape) -> np.ndarray:
        """Sum of r independent observations per (receiver, sender) slot.

        roles broadcasts against `shape`, whose last axis indexes senders.
        Bernoulli mode uses the binomial sufficient statistic directly.
        """
        mus = np.where(np.isin(roles, (Role.LEGITIMATE, Role.HIDDEN)),
                       0.5 + self.epsilon, 0.5 - self.epsilon)
        mus = np.broadcast_to(mus, shape)
        if self.mode == "bernoulli":
            return rng.binomial(r, mus).astype(np.float64)
        a = mus * self.concentration
        b = (1.0 - mus) * self.concentration
        total = np.zeros(shape, dtype=np.float64)
        for _ in range(r):
            total += rng.beta(a, b)
        return total


def sample_observation(ch: ObservationChannel, sender_role: Role,
                       rng: np.random.Generator) -> float:
    """Single observation of a sender with the given role."""
    return ch.sample(sender_role, rng)


@dataclass(frozen=True)
class AdversaryStrategy:
    """Behavioral knobs for the malicious robots.

    hidden_vector_policy drives what hidden adversaries broadcast as their
    interim trust vector; detectable robots broadcast per
    detectable_vector_policy (default: the same worst-case inversion).
    spawn_map ties each spoofed identity to exactly one spawner.
    """
    hidden_vector_policy: str = "inverted"
    detectable_vector_policy: str = "inverted"
    attack_push_gain: float = 1.0
    spawn_map: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hidden_vector_policy not in HIDDEN_POLICIES:
            raise InputError(
                f"unknown hidden policy {self.hidden_vector_policy!r}")
        if self.detectable_vector_policy not in HIDDEN_POLICIES:
            raise InputError(
                f"unknown detectable policy {self.detectable_vector_policy!r}")
        seen = [v for targets in self.spawn_map.values() for v in targets]
        if len(seen) != len(set(seen)):
            raise InputError("a spoofed id appears under multiple spawners")

    def validate_spawns(self, roles: RoleAssignment):
        spoofed = set(np.nonzero(roles.spoofed)[0].tolist())
        mapped = {v for targets in self.spawn_map.values() for v in targets}
        if self.spawn_map and mapped != spoofed:
            raise InputError("spawn_map must cover every spoofed id exactly once")


def adversarial_trust_vector(roles: RoleAssignment, policy: str, me: int,
                             nbr_mask: np.ndarray,
                             rng: np.random.Generator) -> np.ndarray:
    """Broadcast vector of a non-cooperating robot.

    `inverted` trusts detectable neighbors and distrusts the rest; `random`
    draws iid fair coins. Self entry is trust, non-neighbors stay no-data.
    """
    n = roles.n
    out = np.full(n, NO_DATA, dtype=np.int8)
    if policy == "random":
        out[nbr_mask] = rng.integers(0, 2, size=int(nbr_mask.sum()))
    else:
        out[nbr_mask] = np.where(roles.detectable[nbr_mask], TRUST, DISTRUST)
    out[me] = TRUST
    return out


def hidden_trust_vector(roles: RoleAssignment, policy: str, me: int,
                        nbrs, rng: np.random.Generator) -> np.ndarray:
    """Trust vector a hidden adversary relays (Definition: incorrect or
    random opinions). `nbrs` is the self-inclusive neighbor set or mask."""
    if roles.role_of(me) != Role.HIDDEN:
        raise InputError(f"robot {me} is not a hidden adversary")
    mask = np.asarray(nbrs)
    if mask.dtype != bool:
        m = np.zeros(roles.n, dtype=bool)
        m[list(nbrs)] = True
        mask = m
    return adversarial_trust_vector(roles, policy, me, mask, rng)


def broadcast_matrix(g: CommGraph, roles: RoleAssignment,
                     strategy: AdversaryStrategy, interim_legit: dict,
                     rng: np.random.Generator) -> np.ndarray:
    """n x n matrix whose row k is what robot k broadcasts as its interim
    vector: honest rows for legitimate robots, policy rows for adversaries."""
    n = g.n
    V = np.full((n, n), NO_DATA, dtype=np.int8)
    for i, row in interim_legit.items():
        V[i] = row
    for i in np.nonzero(roles.hidden)[0]:
        V[i] = adversarial_trust_vector(
            roles, strategy.hidden_vector_policy, int(i), g.adj_self[i], rng)
    for i in np.nonzero(roles.detectable)[0]:
        V[i] = adversarial_trust_vector(
            roles, strategy.detectable_vector_policy, int(i),
            g.adj_self[i], rng)
    return V

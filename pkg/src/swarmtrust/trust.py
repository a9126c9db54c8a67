"""Trust protocol: interim majority, neighborhood vote, round bounds, and
the anytime doubling driver."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from swarmtrust.errors import DomainError, InputError
from swarmtrust.threat import (DISTRUST, NO_DATA, TRUST, AdversaryStrategy,
                               ObservationChannel, broadcast_matrix)
from swarmtrust.topology import CommGraph, RoleAssignment


@dataclass(frozen=True)
class TrustVector:
    """Ternary per-robot opinion held by `owner`: 1 trust, 0 distrust,
    -1 no data (non-neighbor)."""
    owner: int
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int8)
        if self.entries is not arr:
            object.__setattr__(self, "entries", arr)
        if arr[self.owner] != TRUST:
            raise InputError("owner must trust itself")

    def ternary_string(self) -> str:
        return "".join("-" if v == NO_DATA else str(int(v))
                       for v in self.entries)

    def trusted_ids(self) -> np.ndarray:
        return np.nonzero(self.entries == TRUST)[0]

    def __eq__(self, other):
        return (isinstance(other, TrustVector) and self.owner == other.owner
                and np.array_equal(self.entries, other.entries))


@dataclass(frozen=True)
class TrustMatrix:
    """Interim vectors assembled at one robot; column i holds v_i."""
    owner: int
    columns: np.ndarray

    @property
    def rows(self) -> np.ndarray:
        """Row-major view: rows[k, j] = v_{k,j}."""
        return self.columns.T


@dataclass(frozen=True)
class RoundBudget:
    r: int
    delta: float

    def __post_init__(self):
        if self.r < 1:
            raise InputError("round budget must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise InputError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class World:
    """Immutable simulation world: topology, roles, channel, adversary
    behavior. Shared read-only across trials."""
    graph: CommGraph
    roles: RoleAssignment
    channel: ObservationChannel
    strategy: AdversaryStrategy = field(default_factory=AdversaryStrategy)

    def __post_init__(self):
        if self.graph.n != self.roles.n:
            raise InputError("graph and role assignment sizes differ")
        self.strategy.validate_spawns(self.roles)


def interim_trust(obs: dict, owner: int, nbrs) -> TrustVector:
    """Majority-of-observations verdict: trust j iff the observation sum
    over r rounds is at least r/2 (ties trust)."""
    nbrs = set(int(j) for j in nbrs) | {owner}
    lengths = {len(seq) for j, seq in obs.items() if j != owner}
    if len(lengths) > 1:
        raise InputError("ragged observation sequences across neighbors")
    missing = nbrs - {owner} - set(int(j) for j in obs)
    if missing:
        raise InputError(f"missing observation sequences for {sorted(missing)}")
    n = max(max(nbrs), max(obs, default=0)) + 1
    entries = np.full(n, NO_DATA, dtype=np.int8)
    for j in nbrs:
        if j == owner:
            continue
        seq = np.asarray(obs[j], dtype=np.float64)
        r = seq.size
        entries[j] = TRUST if seq.sum() >= r / 2.0 else DISTRUST
    entries[owner] = TRUST
    return TrustVector(owner, entries)


def final_trust(m: TrustMatrix, owner: int, nbrs) -> TrustVector:
    """Neighborhood vote: trust j iff the interim-trusted robots voting
    trust are at least as many as those voting distrust (no-data excluded)."""
    rows = m.rows
    n = rows.shape[0]
    own = rows[owner]
    trusted = own == TRUST
    pos = trusted.astype(np.int64) @ (rows == TRUST)
    neg = trusted.astype(np.int64) @ (rows == DISTRUST)
    entries = np.full(n, NO_DATA, dtype=np.int8)
    for j in set(int(j) for j in nbrs) | {owner}:
        entries[j] = TRUST if pos[j] >= neg[j] else DISTRUST
    entries[owner] = TRUST
    return TrustVector(owner, entries)


def truth_vector(g: CommGraph, roles: RoleAssignment, owner: int) -> TrustVector:
    """Perfect-observation reference: trust legitimate and hidden neighbors,
    distrust detectable ones, no data outside the neighborhood."""
    entries = np.full(g.n, NO_DATA, dtype=np.int8)
    mask = g.adj_self[owner]
    entries[mask] = np.where(roles.detectable[mask], DISTRUST, TRUST)
    entries[owner] = TRUST
    return TrustVector(owner, entries)


def _legit_interim_batch(world: World, r: int, trials: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Interim rows for every legitimate robot, batched over trials.

    Returns int8 (trials, L, n) where L indexes legitimate robots in
    ascending id order. Bernoulli mode draws the per-pair binomial
    sufficient statistic instead of r individual samples.
    """
    g, roles, ch = world.graph, world.roles, world.channel
    legit_ids = np.nonzero(roles.legitimate)[0]
    L, n = legit_ids.size, g.n
    sums = ch.sample_round_sums(roles.values, r, rng, (trials, L, n))
    rows = np.where(2.0 * sums >= r, TRUST, DISTRUST).astype(np.int8)
    nbr = g.adj_self[legit_ids]                          # (L, n)
    rows = np.where(nbr[None, :, :], rows, NO_DATA)
    rows[:, np.arange(L), legit_ids] = TRUST
    return rows


def _broadcast_batch(world: World, interim_rows: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Full broadcast matrices V (trials, n, n): honest legitimate rows plus
    adversary policy rows."""
    g, roles, strat = world.graph, world.roles, world.strategy
    trials = interim_rows.shape[0]
    n = g.n
    legit_ids = np.nonzero(roles.legitimate)[0]
    V = np.full((trials, n, n), NO_DATA, dtype=np.int8)
    V[:, legit_ids, :] = interim_rows

    for ids, policy in ((np.nonzero(roles.hidden)[0],
                         strat.hidden_vector_policy),
                        (np.nonzero(roles.detectable)[0],
                         strat.detectable_vector_policy)):
        if ids.size == 0:
            continue
        mask = g.adj_self[ids]                           # (k, n)
        if policy == "inverted":
            row = np.where(mask,
                           np.where(roles.detectable[None, :], TRUST, DISTRUST),
                           NO_DATA).astype(np.int8)
            row[np.arange(ids.size), ids] = TRUST
            V[:, ids, :] = row[None, :, :]
        else:
            draws = rng.integers(0, 2, size=(trials, ids.size, n),
                                 dtype=np.int8)
            row = np.where(mask[None, :, :], draws, NO_DATA)
            row[:, np.arange(ids.size), ids] = TRUST
            V[:, ids, :] = row
    return V


def _vote_batch(V: np.ndarray, owner_ids: np.ndarray,
                nbr_mask: np.ndarray) -> np.ndarray:
    """Final vote for the given owners. V is (trials, n, n); returns int8
    (trials, len(owner_ids), n) with NO_DATA outside each neighborhood."""
    T = (V == TRUST).astype(np.float32)
    Z = (V == DISTRUST).astype(np.float32)
    pos = T[:, owner_ids, :] @ T
    neg = T[:, owner_ids, :] @ Z
    final = np.where(pos >= neg, TRUST, DISTRUST).astype(np.int8)
    final = np.where(nbr_mask[None, :, :], final, NO_DATA)
    return final


def _batch_limit(n: int) -> int:
    # keep the float32 vote operands around ~100 MB
    return max(1, int(100e6 / (8 * n * n)))


def simulate_protocol(world: World, r: int, trials: int,
                      rng: np.random.Generator):
    """Run `trials` independent executions; return bool arrays
    (fsr_success, baseline_success) under the all-legitimate-robots
    ground-truth criterion."""
    if r < 1:
        raise InputError("r must be >= 1")
    g, roles = world.graph, world.roles
    legit_ids = np.nonzero(roles.legitimate)[0]
    nbr = g.adj_self[legit_ids]
    truth = np.where(nbr,
                     np.where(roles.detectable[None, :], DISTRUST, TRUST),
                     NO_DATA).astype(np.int8)
    truth[np.arange(legit_ids.size), legit_ids] = TRUST

    fsr_ok = np.empty(trials, dtype=bool)
    base_ok = np.empty(trials, dtype=bool)
    step = _batch_limit(g.n)
    for lo in range(0, trials, step):
        b = min(step, trials - lo)
        interim = _legit_interim_batch(world, r, b, rng)
        base_ok[lo:lo + b] = ((interim == truth[None]) | ~nbr[None]).all((1, 2))
        V = _broadcast_batch(world, interim, rng)
        final = _vote_batch(V, legit_ids, nbr)
        fsr_ok[lo:lo + b] = ((final == truth[None]) | ~nbr[None]).all((1, 2))
    return fsr_ok, base_ok


def success_rate(world: World, r: int, trials: int, rng: np.random.Generator,
                 algorithm: str = "fsr") -> float:
    fsr_ok, base_ok = simulate_protocol(world, r, trials, rng)
    if algorithm == "fsr":
        return float(fsr_ok.mean())
    if algorithm == "baseline":
        return float(base_ok.mean())
    raise InputError(f"unknown algorithm {algorithm!r}")


def baseline_success_rate(world: World, r: int, trials: int,
                          rng: np.random.Generator) -> float:
    """All-robot success rate of the interim-only algorithm; skips the
    vote stage entirely (cheaper for long round scans)."""
    if r < 1:
        raise InputError("r must be >= 1")
    g, roles = world.graph, world.roles
    legit_ids = np.nonzero(roles.legitimate)[0]
    nbr = g.adj_self[legit_ids]
    truth = np.where(nbr,
                     np.where(roles.detectable[None, :], DISTRUST, TRUST),
                     NO_DATA).astype(np.int8)
    truth[np.arange(legit_ids.size), legit_ids] = TRUST
    ok = np.empty(trials, dtype=bool)
    step = _batch_limit(g.n)
    for lo in range(0, trials, step):
        b = min(step, trials - lo)
        interim = _legit_interim_batch(world, r, b, rng)
        ok[lo:lo + b] = ((interim == truth[None]) | ~nbr[None]).all((1, 2))
    return float(ok.mean())


def find_spoofed_robots(world: World, r: int,
                        rng: np.random.Generator) -> dict:
    """One protocol execution; returns the final trust vector of every
    legitimate robot."""
    if r < 1:
        raise InputError("r must be >= 1")
    g, roles = world.graph, world.roles
    legit_ids = np.nonzero(roles.legitimate)[0]
    interim = _legit_interim_batch(world, r, 1, rng)
    V = _broadcast_batch(world, interim, rng)
    final = _vote_batch(V, legit_ids, g.adj_self[legit_ids])[0]
    final[np.arange(legit_ids.size), legit_ids] = TRUST  # self-trust holds
    return {int(i): TrustVector(int(i), final[k])
            for k, i in enumerate(legit_ids)}


def baseline_trust(world: World, r: int, rng: np.random.Generator) -> dict:
    """Interim vectors only (no neighborhood vote)."""
    if r < 1:
        raise InputError("r must be >= 1")
    roles = world.roles
    legit_ids = np.nonzero(roles.legitimate)[0]
    interim = _legit_interim_batch(world, r, 1, rng)[0]
    return {int(i): TrustVector(int(i), interim[k])
            for k, i in enumerate(legit_ids)}


def first_success_rounds(world: World, trials: int, rng: np.random.Generator,
                         algorithm: str = "fsr", r_cap: int = 400) -> np.ndarray:
    """Per-trial smallest r with an all-robot-correct output; fresh
    observations at each r. Trials still unfinished at r_cap report r_cap."""
    out = np.full(trials, r_cap, dtype=np.int64)
    open_mask = np.ones(trials, dtype=bool)
    for r in range(1, r_cap):
        k = int(open_mask.sum())
        if k == 0:
            break
        fsr_ok, base_ok = simulate_protocol(world, r, k, rng)
        ok = fsr_ok if algorithm == "fsr" else base_ok
        idx = np.nonzero(open_mask)[0]
        out[idx[ok]] = r
        open_mask[idx[ok]] = False
    return out


def rounds_bound_theorem1(l: int, n: int, epsilon: float, tau: int,
                          d_l: int, delta: float) -> int:
    """Round budget guaranteeing correct trust vectors w.p. >= 1-delta."""
    if tau <= 0:
        raise DomainError("tau must be positive; consensus is impossible "
                          "otherwise")
    if not 0.0 < epsilon < 0.5:
        raise InputError("epsilon must lie in (0, 0.5)")
    if not 0.0 < delta < 1.0:
        raise InputError("delta must lie in (0, 1)")
    e2 = epsilon * epsilon
    term1 = math.log(2.0 * l * n / (delta * e2 * tau)) / (tau * e2)
    term2 = math.log(2.0 * math.exp(math.e) * d_l / tau) / e2
    return int(math.ceil(term1 + term2)) + 1


def rounds_bound_baseline(delta: float, epsilon: float) -> int:
    """Per-pair observation count for majority-only success w.p. 1-delta."""
    if not 0.0 < delta < 1.0:
        raise InputError("delta must lie in (0, 1)")
    if not 0.0 < epsilon < 0.5:
        raise InputError("epsilon must lie in (0, 0.5)")
    return int(math.ceil(math.log(1.0 / delta) / (2.0 * epsilon * epsilon)))


def anytime_rounds_cap(n: int, epsilon: float) -> float:
    """Worst-case doubling cap: 20 log(n / eps^2) / eps^2."""
    e2 = epsilon * epsilon
    return 20.0 * math.log(n / e2) / e2


def anytime_driver(world: World, callback, rng: np.random.Generator,
                   cap: float | None = None) -> dict:
    """Doubling driver: rerun the protocol at r = 1, 2, 4, ... up to the
    worst-case cap, invoking callback(r, vectors) whenever the vector set
    changes (always on the first run). Returns the last vector set."""
    if cap is None:
        cap = anytime_rounds_cap(world.graph.n, world.channel.epsilon)
    r_hat = 1
    vectors = find_spoofed_robots(world, r_hat, rng)
    callback(r_hat, vectors)
    while r_hat <= cap:
        r_hat *= 2
        fresh = find_spoofed_robots(world, r_hat, rng)
        if any(fresh[i] != vectors[i] for i in vectors):
            vectors = fresh
            callback(r_hat, vectors)
    return vectors


def vectors_to_csv(vectors: dict) -> str:
    """Serialize trust vectors as `owner,target,value` rows with values in
    {0, 1, -}."""
    buf = io.StringIO()
    buf.write("owner,target,value\n")
    for owner in sorted(vectors):
        for target, val in enumerate(vectors[owner].entries):
            sym = "-" if val == NO_DATA else str(int(val))
            buf.write(f"{owner},{target},{sym}\n")
    return buf.getvalue()

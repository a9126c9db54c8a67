"""Resilient distributed estimation: trusted adjacency flooding, consensus
weight construction, and weight recovery from observability windows."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from swarmtrust.errors import FloodingStallError, InputError, RankDeficiencyError
from swarmtrust.threat import DISTRUST, NO_DATA, TRUST
from swarmtrust.topology import (CommGraph, RoleAssignment,
                                 algebraic_connectivity)
from swarmtrust.trust import TrustVector, World


@dataclass
class PartialAdjacency:
    """Per-robot flooding state: each row is all no-data or fully binary."""
    owner: int
    matrix: np.ndarray

    def nodata_rows(self) -> np.ndarray:
        return (self.matrix == NO_DATA).all(axis=1)

    def complete(self) -> bool:
        return not self.nodata_rows().any()


def _row_from_vector(vec: np.ndarray) -> np.ndarray:
    # no-data entries mean "not my neighbor": convert to 0
    return np.where(vec == NO_DATA, 0, vec).astype(np.int8)


def _broadcast_row(world: World, k: int, trust: dict,
                   rng: np.random.Generator) -> np.ndarray:
    """What robot k claims as its own adjacency/trust row."""
    roles = world.roles
    if roles.legitimate[k]:
        return _row_from_vector(trust[k].entries)
    # non-cooperating robots advertise their policy vector as a row
    from swarmtrust.threat import adversarial_trust_vector
    policy = (world.strategy.hidden_vector_policy if roles.hidden[k]
              else world.strategy.detectable_vector_policy)
    vec = adversarial_trust_vector(roles, policy, k,
                                   world.graph.adj_self[k], rng)
    return _row_from_vector(vec)


def fram_states(world: World, trust: dict, rng: np.random.Generator):
    """Iterator over per-exchange flooding states.

    Yields dict {legit id -> PartialAdjacency} after each synchronous
    exchange; the first yield is the state after the single vector-broadcast
    round (Algorithm line: matrix assembly from neighbors' vectors). Rows
    are accepted only from final-trusted neighbors.
    """
    g, roles = world.graph, world.roles
    n = g.n
    legit_ids = [int(i) for i in np.nonzero(roles.legitimate)[0]]
    rows = {k: _broadcast_row(world, k, trust, rng) for k in range(n)}

    state = {}
    for i in legit_ids:
        m = np.full((n, n), NO_DATA, dtype=np.int8)
        for k in range(n):
            if g.adj_self[i, k] and trust[i].entries[k] == TRUST:
                m[k] = rows[k]
        state[i] = PartialAdjacency(i, m)
    yield state

    while True:
        # two-phase: everyone floods the previous snapshot
        snapshot = {i: state[i].matrix.copy() for i in legit_ids}
        for i in legit_ids:
            mine = state[i].matrix
            for k in legit_ids:
                if k == i or not g.adj_self[i, k]:
                    continue
                if trust[i].entries[k] != TRUST:
                    continue
                theirs = snapshot[k]
                fill = (mine == NO_DATA).all(axis=1) & \
                       ~(theirs == NO_DATA).all(axis=1)
                mine[fill] = theirs[fill]
        yield state


def fram(world: World, trust: dict, max_rounds: int | None = None,
         rng: np.random.Generator | None = None) -> dict:
    """Trusted adjacency flooding until every row is known and at least
    n-1 exchanges have elapsed.

    Returns {legit id -> (n, n) int8 adjacency}; rows and columns of robots
    the owner finally distrusts are zeroed. Raises FloodingStallError with
    the partial matrices if no-data rows persist at the round cap.
    """
    g = world.graph
    n = g.n
    if max_rounds is None:
        max_rounds = 2 * n
    if rng is None:
        rng = np.random.default_rng(0)
    def filled(i, part):
        # a row is required only if the owner trusts that id directly or a
        # trusted row claims it as a neighbor; ids advertised by nobody the
        # owner trusts (e.g. spoofed identities) can never arrive
        need = (trust[i].entries == TRUST) | \
               (part.matrix == TRUST).any(axis=0)
        return not (part.nodata_rows() & need).any()

    gen = fram_states(world, trust, rng)
    state = next(gen)
    rounds = 1
    while rounds < max_rounds:
        done = all(filled(i, p) for i, p in state.items())
        if done and rounds >= n - 1:
            break
        state = next(gen)
        rounds += 1
    if not all(filled(i, p) for i, p in state.items()):
        raise FloodingStallError(
            f"flooding stalled after {rounds} rounds", state)

    out = {}
    for i, part in state.items():
        m = part.matrix.copy()
        distrusted = trust[i].entries == DISTRUST
        m[distrusted, :] = 0
        m[:, distrusted] = 0
        m[m == NO_DATA] = 0  # rows of ids no trusted robot advertises
        out[i] = m
    return out


def weight_from_adjacency(adj: np.ndarray, scheme: str = "uniform") -> np.ndarray:
    """Row-stochastic consensus weights from a self-inclusive adjacency.

    `uniform` puts 1/|N_i| on each neighbor; `metropolis` uses
    1/(1+max(d_i, d_j)) off-diagonal with the complement on the diagonal.
    """
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("adjacency must be square")
    if not np.all(np.diag(a) == 1):
        raise InputError("adjacency must carry self-loops on its diagonal")
    deg = a.sum(axis=1)
    if (deg == 0).any():
        raise InputError("zero-degree row in adjacency")
    if scheme == "uniform":
        return a / deg[:, None]
    if scheme == "metropolis":
        n = a.shape[0]
        off = a - np.eye(n)
        d = off.sum(axis=1)
        w = np.zeros((n, n))
        pair = off.astype(bool)
        w[pair] = 1.0 / (1.0 + np.maximum(d[:, None], d[None, :])[pair])
        np.fill_diagonal(w, 1.0 - w.sum(axis=1))
        return w
    raise InputError(f"unknown weight scheme {scheme!r}")


def output_matrix(g: CommGraph, i: int) -> np.ndarray:
    """C_i: selector rows for the self-inclusive neighborhood of i."""
    ids = np.nonzero(g.adj_self[i])[0]
    C = np.zeros((ids.size, g.n))
    C[np.arange(ids.size), ids] = 1.0
    return C


@dataclass(frozen=True)
class ObservabilityBlock:
    """Stacked outputs C W^a ... C W^b."""
    block: np.ndarray
    a: int
    b: int


def observability_window(C: np.ndarray, W: np.ndarray, a: int,
                         b: int) -> ObservabilityBlock:
    """Stack C W^t for t = a..b."""
    if a < 0 or b < a:
        raise InputError("window must satisfy 0 <= a <= b")
    mats = []
    P = np.linalg.matrix_power(W, a)
    for _ in range(a, b + 1):
        mats.append(C @ P)
        P = P @ W
    return ObservabilityBlock(np.vstack(mats), a, b)


RANK_RTOL = 1e-10


def recover_weight_matrix(o_early: ObservabilityBlock,
                          o_late: ObservabilityBlock):
    """Least-squares solve of O_early W = O_late.

    Requires numerical full column rank of O_early (singular values above
    1e-10 of the largest). Returns (W_hat, residual_fro).
    """
    A = o_early.block
    B = o_late.block
    if A.shape != B.shape:
        raise InputError("observability windows must have matching shapes")
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int((sv > RANK_RTOL * sv[0]).sum()) if sv.size else 0
    if rank < A.shape[1]:
        raise RankDeficiencyError(
            f"observability window rank {rank} < {A.shape[1]} columns",
            deficiency=A.shape[1] - rank)
    W_hat, *_ = np.linalg.lstsq(A, B, rcond=None)
    residual = float(np.linalg.norm(A @ W_hat - B))
    return W_hat, residual


def perceived_vs_actual_connectivity(g: CommGraph, roles: RoleAssignment):
    """(lambda2 of the full graph, lambda2 with spoofed identities removed)."""
    perceived = algebraic_connectivity(g)
    keep = ~roles.spoofed
    sub = g.induced(keep)
    actual = algebraic_connectivity(sub) if sub.n >= 2 else 0.0
    return perceived, actual


def adjacency_to_csv(matrix: np.ndarray) -> str:
    """CSV rows with no-data rendered as `-`."""
    buf = io.StringIO()
    for row in matrix:
        buf.write(",".join("-" if v == NO_DATA else str(int(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()

"""Linear consensus, W-MSR trimming, and trust-prefiltered target agreement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from swarmtrust.accel import get_kernels
from swarmtrust.errors import InputError
from swarmtrust.threat import TRUST
from swarmtrust.topology import CommGraph
from swarmtrust.trust import World, find_spoofed_robots, truth_vector

_K = get_kernels()

MODES = ("wmsr", "fsr_then_wmsr", "fsr_then_average")


@dataclass(frozen=True)
class WmsrParams:
    trim: int = 1

    def __post_init__(self):
        if self.trim < 0:
            raise InputError("trim budget must be >= 0")


def consensus_step(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """x' = W x, applied per value dimension."""
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.shape[0] != W.shape[1] or W.shape[1] != x.shape[0]:
        raise InputError("weight matrix and state dimensions do not match")
    return W @ x


def wmsr_step(g: CommGraph, x: np.ndarray, trim: int, i: int) -> float:
    """One W-MSR update for node i over scalar values.

    Discards up to `trim` neighbor values strictly above x_i and up to
    `trim` strictly below, then averages the retained values with x_i.
    Trim rule follows the standard external formulation (uniform weights).
    """
    if trim < 0:
        raise InputError("trim budget must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    update = np.zeros(g.n, dtype=bool)
    update[i] = True
    out = _K.wmsr_round(x, g.adj, update, trim)
    return float(out[i])


@dataclass(frozen=True)
class DriftPolicy:
    """Adversary broadcast: start at the true target estimate and drift
    away at a fixed rate per step along a fixed direction."""
    rate: float = 0.05
    direction: tuple = (1.0, 0.0)


def run_target_agreement(world: World, mode: str, steps: int,
                         rng: np.random.Generator,
                         target: np.ndarray | None = None,
                         noise_sigma: float = 0.5,
                         wmsr: WmsrParams = WmsrParams(trim=1),
                         drift: DriftPolicy = DriftPolicy(),
                         trust_vectors: dict | None = None,
                         use_ground_truth_trust: bool = False) -> np.ndarray:
    """Iterated agreement on a 2-D target estimate under adversarial drift.

    Legitimate nodes start at target + N(0, sigma^2 I). Adversaries
    broadcast a drifting value. In fsr_* modes the neighbor set is first
    restricted to final-trusted robots (supplied, ground-truth, or computed
    via one protocol run). Returns the (steps+1, n, 2) trajectory.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}")
    g, roles = world.graph, world.roles
    n = g.n
    if target is None:
        target = np.zeros(2)
    target = np.asarray(target, dtype=np.float64)
    d = target.size
    direction = np.asarray(drift.direction, dtype=np.float64)[:d]

    legit = roles.legitimate
    malicious = ~legit
    x = np.tile(target, (n, 1))
    x[legit] += rng.normal(0.0, noise_sigma, size=(int(legit.sum()), d))

    adj = g.adj.copy()
    if mode.startswith("fsr_"):
        if trust_vectors is None:
            if use_ground_truth_trust:
                trust_vectors = {int(i): truth_vector(g, roles, int(i))
                                 for i in np.nonzero(legit)[0]}
            else:
                trust_vectors = find_spoofed_robots(world, 10, rng)
        # drop broadcast edges from robots the receiver finally distrusts
        for i in np.nonzero(legit)[0]:
            keep = trust_vectors[int(i)].entries == TRUST
            adj[i, :] &= keep
    update = legit

    traj = np.empty((steps + 1, n, d))
    traj[0] = x
    for t in range(1, steps + 1):
        x = x.copy()
        x[malicious] = target + drift.rate * t * direction
        if mode.endswith("average"):
            nxt = x.copy()
            for i in np.nonzero(update)[0]:
                nbrs = np.nonzero(adj[i])[0]
                vals = np.vstack([x[nbrs], x[i][None]])
                nxt[i] = vals.mean(axis=0)
            x = nxt
        else:
            cols = np.empty_like(x)
            for k in range(d):
                cols[:, k] = _K.wmsr_round(
                    np.ascontiguousarray(x[:, k]), adj, update, wmsr.trim)
            x[update] = cols[update]
        traj[t] = x
    return traj


def legit_mean_error(traj: np.ndarray, legit_mask: np.ndarray,
                     target: np.ndarray) -> np.ndarray:
    """Per-step distance of the legitimate mean estimate from the target."""
    mean = traj[:, legit_mask, :].mean(axis=1)
    return np.linalg.norm(mean - target[None, :], axis=1)


def trajectory_to_csv(traj: np.ndarray) -> str:
    lines = ["t,node,dim,value"]
    steps, n, d = traj.shape
    for t in range(steps):
        for i in range(n):
            for k in range(d):
                lines.append(f"{t},{i},{k},{traj[t, i, k]!r}")
    return "\n".join(lines) + "\n"

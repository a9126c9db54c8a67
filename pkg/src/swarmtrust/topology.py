"""Communication graphs, roles, tau-triangularity, and graph generators."""
from __future__ import annotations

import importlib.resources
import itertools
import re
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from swarmtrust.accel import get_kernels
from swarmtrust.errors import DomainError, InputError

_K = get_kernels()


class Role(IntEnum):
    LEGITIMATE = 0
    SPAWNING = 1
    SPOOFED = 2
    HIDDEN = 3


class CommGraph:
    """Undirected communication topology.

    Edges are stored as unordered pairs without self-loops; neighborhoods
    are self-inclusive through :meth:`neighbors` / :attr:`adj_self`.
    Immutable after construction and safe to share across trials.
    """

    def __init__(self, n: int, edges):
        if n < 1:
            raise InputError(f"node count must be positive, got {n}")
        canon = set()
        for i, j in edges:
            if i == j:
                raise InputError(f"self-edge {{{i},{i}}} not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge {{{i},{j}}} out of range for n={n}")
            canon.add((min(i, j), max(i, j)))
        self.n = n
        self.edges = frozenset(canon)
        adj = np.zeros((n, n), dtype=bool)
        for i, j in canon:
            adj[i, j] = True
            adj[j, i] = True
        self._adj = adj
        self._adj_self = adj | np.eye(n, dtype=bool)

    @property
    def adj(self) -> np.ndarray:
        """(n, n) bool adjacency without self-loops."""
        return self._adj

    @property
    def adj_self(self) -> np.ndarray:
        """(n, n) bool self-inclusive adjacency."""
        return self._adj_self

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def degree(self, i: int) -> int:
        return int(self._adj[i].sum())

    def induced(self, keep) -> "CommGraph":
        """Subgraph on the node subset `keep` (bool mask or id iterable),
        relabelled to 0..k-1 in ascending original-id order."""
        keep = np.asarray(keep)
        if keep.dtype != bool:
            mask = np.zeros(self.n, dtype=bool)
            mask[keep] = True
            keep = mask
        ids = np.nonzero(keep)[0]
        remap = {int(old): new for new, old in enumerate(ids)}
        edges = [(remap[i], remap[j]) for i, j in self.edges
                 if keep[i] and keep[j]]
        return CommGraph(len(ids), edges)

    def to_edge_list_text(self) -> str:
        lines = [str(self.n)]
        lines += [f"{i} {j}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list_text(cls, text: str) -> "CommGraph":
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows:
            raise InputError("empty edge-list text")
        try:
            n = int(rows[0])
            edges = [tuple(int(x) for x in ln.split()) for ln in rows[1:]]
        except ValueError as exc:
            raise InputError(f"malformed edge-list text: {exc}") from None
        if any(len(e) != 2 for e in edges):
            raise InputError("each edge line must hold exactly two node ids")
        return cls(n, edges)

    def to_dot(self, roles: "RoleAssignment | None" = None) -> str:
        colors = {Role.LEGITIMATE: "black", Role.SPAWNING: "red",
                  Role.SPOOFED: "orange", Role.HIDDEN: "purple"}
        lines = ["graph comm {"]
        for i in range(self.n):
            attr = ""
            if roles is not None:
                attr = f' [color={colors[roles.role_of(i)]}]'
            lines.append(f"  {i}{attr};")
        for i, j in sorted(self.edges):
            lines.append(f"  {i} -- {j};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return (isinstance(other, CommGraph)
                and self.n == other.n and self.edges == other.edges)

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"CommGraph(n={self.n}, edges={len(self.edges)})"


class RoleAssignment:
    """One role per node. Counts and the detectable set are derived."""

    def __init__(self, roles):
        arr = np.asarray([int(r) for r in roles], dtype=np.int8)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("roles must be a non-empty 1-D sequence")
        if not np.isin(arr, [int(r) for r in Role]).all():
            raise InputError("unknown role value in assignment")
        self._roles = arr
        self._roles.flags.writeable = False

    @classmethod
    def all_legitimate(cls, n: int) -> "RoleAssignment":
        return cls(np.zeros(n, dtype=np.int8))

    @property
    def n(self) -> int:
        return self._roles.size

    @property
    def values(self) -> np.ndarray:
        return self._roles

    def role_of(self, i: int) -> Role:
        return Role(int(self._roles[i]))

    @property
    def legitimate(self) -> np.ndarray:
        return self._roles == Role.LEGITIMATE

    @property
    def hidden(self) -> np.ndarray:
        return self._roles == Role.HIDDEN

    @property
    def spoofed(self) -> np.ndarray:
        return self._roles == Role.SPOOFED

    @property
    def spawning(self) -> np.ndarray:
        return self._roles == Role.SPAWNING

    @property
    def detectable(self) -> np.ndarray:
        """S = spawning union spoofed."""
        return self.spoofed | self.spawning

    @property
    def counts(self) -> dict:
        return {"l": int(self.legitimate.sum()),
                "s": int(self.detectable.sum()),
                "h": int(self.hidden.sum()),
                "m": int(self.detectable.sum() + self.hidden.sum())}

    def __eq__(self, other):
        return (isinstance(other, RoleAssignment)
                and np.array_equal(self._roles, other._roles))

    def __repr__(self):
        c = self.counts
        return f"RoleAssignment(l={c['l']}, s={c['s']}, h={c['h']})"


def neighbors(g: CommGraph, i: int) -> set:
    """Self-inclusive neighborhood of node i."""
    if not 0 <= i < g.n:
        raise InputError(f"node id {i} out of range for n={g.n}")
    return set(np.nonzero(g.adj_self[i])[0].tolist())


def tau_pair(g: CommGraph, roles: RoleAssignment, i: int, j: int) -> int:
    """Legitimate minus hidden common (self-inclusive) neighbors of i and j.

    Defined for adjacent pairs (or i == j) only.
    """
    if i != j and not g.has_edge(i, j):
        raise InputError(f"tau is defined for neighbors; {i} and {j} "
                         "are not adjacent")
    common = g.adj_self[i] & g.adj_self[j]
    return int((common & roles.legitimate).sum()
               - (common & roles.hidden).sum())


def min_tau(g: CommGraph, roles: RoleAssignment) -> int:
    """Minimum tau over legitimate i and every neighbor j != i."""
    value, found = _K.tau_min(g.adj_self, roles.legitimate, roles.hidden)
    if not found:
        raise DomainError("no legitimate node with a neighbor; "
                          "tau-triangularity undefined")
    return int(value)


def is_sufficiently_connected(g: CommGraph, roles: RoleAssignment) -> bool:
    """True iff the subgraph induced on legitimate nodes is connected."""
    mask = roles.legitimate
    k = int(mask.sum())
    if k == 0:
        return False
    if k == 1:
        return True
    sub = g.adj[np.ix_(mask, mask)]
    ncomp, _ = connected_components(csr_matrix(sub), directed=False)
    return ncomp == 1


def laplacian(g: CommGraph) -> np.ndarray:
    a = g.adj.astype(np.float64)
    return np.diag(a.sum(axis=1)) - a


def algebraic_connectivity(g: CommGraph) -> float:
    """Second-smallest Laplacian eigenvalue (dense symmetric solve)."""
    if g.n < 2:
        raise InputError("algebraic connectivity needs at least 2 nodes")
    w = np.linalg.eigvalsh(laplacian(g))
    return float(max(w[1], 0.0))


def gen_random_geometric(n: int, box_side: float, rng: np.random.Generator):
    """Random geometric graph in a square box with distance-decayed edges.

    Edge {i,j} appears with probability 1 for distance <= 1, 1/distance for
    distances in (1, 4), and 0 otherwise. Deterministic given the generator
    state; the edge set is fixed for the lifetime of the graph.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if box_side <= 0:
        raise InputError("box_side must be positive")
    pos = rng.uniform(0.0, box_side, size=(n, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    with np.errstate(divide="ignore"):
        prob = np.where(dist <= 1.0, 1.0,
                        np.where(dist < 4.0, 1.0 / dist, 0.0))
    draw = rng.random((n, n))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    present = upper & (draw < prob)
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(present))]
    return CommGraph(n, edges), pos


def is_r_s_robust(g: CommGraph, r: int, s: int) -> bool:
    """Exhaustive (r, s)-robustness check; exponential, fixture-scale only."""
    n = g.n
    adj = g.adj
    for assign in itertools.product((0, 1, 2), repeat=n):
        d = np.frombuffer(bytes(assign), dtype=np.int8)
        s1 = d == 1
        s2 = d == 2
        if not s1.any() or not s2.any():
            continue
        out1 = (adj[s1][:, ~s1].sum(axis=1) >= r).sum()
        out2 = (adj[s2][:, ~s2].sum(axis=1) >= r).sum()
        if out1 == s1.sum() or out2 == s2.sum() or out1 + out2 >= s:
            continue
        return False
    return True


def _load_fixture_edges(name: str) -> CommGraph:
    ref = importlib.resources.files("swarmtrust").joinpath(f"data/{name}.edges")
    return CommGraph.from_edge_list_text(ref.read_text())


_COMPLETE_RE = re.compile(
    r"^complete\(\s*l\s*=\s*(\d+)\s*,\s*h\s*=\s*(\d+)\s*,\s*s\s*=\s*(\d+)\s*\)$")


def complete_world(l: int, h: int, s: int):
    """Complete graph with l legitimate, h hidden, and s detectable robots.

    Detectable ids split into one spawner plus s-1 spoofed identities when
    s > 0. Node order: legitimate, hidden, detectable.
    """
    n = l + h + s
    if n < 1:
        raise InputError("complete fixture needs at least one node")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    roles = np.full(n, int(Role.LEGITIMATE), dtype=np.int8)
    roles[l:l + h] = int(Role.HIDDEN)
    if s > 0:
        roles[l + h] = int(Role.SPAWNING)
        roles[l + h + 1:] = int(Role.SPOOFED)
    return CommGraph(n, edges), RoleAssignment(roles)


def fixture_graph(name: str):
    """Named fixture topologies with their role assignments.

    "estimation5": the 5-node adjacency-flooding example, all legitimate.
    "fig3": 12 legitimate nodes plus spoofed ids 12 and 13 wired so the
    perceived graph is 3-connected while the true 12-node graph is
    connected but not (2,2)-robust.
    "complete(l=..,h=..,s=..)": complete-graph adversary families.
    """
    m = _COMPLETE_RE.match(name.replace(" ", ""))
    if m:
        return complete_world(*(int(x) for x in m.groups()))
    if name == "estimation5":
        g = _load_fixture_edges("estimation5")
        return g, RoleAssignment.all_legitimate(g.n)
    if name == "fig3":
        g = _load_fixture_edges("fig3")
        roles = np.full(g.n, int(Role.LEGITIMATE), dtype=np.int8)
        roles[12] = int(Role.SPOOFED)
        roles[13] = int(Role.SPOOFED)
        return g, RoleAssignment(roles)
    raise InputError(f"unknown fixture graph {name!r}")

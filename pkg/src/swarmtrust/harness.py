"""Experiment runners: seeded trial orchestration, config loading, and
CSV emission for the reproduction studies."""
from __future__ import annotations

import concurrent.futures
import dataclasses
import io
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from swarmtrust import consensus, estimation, flocking, topology, trust
from swarmtrust.errors import DomainError, InputError
from swarmtrust.threat import AdversaryStrategy, ObservationChannel
from swarmtrust.topology import (CommGraph, Role, RoleAssignment,
                                 fixture_graph, gen_random_geometric)
from swarmtrust.trust import World

EXPERIMENTS = ("table1", "rounds_vs_eps", "tau_study", "connectivity",
               "wmsr", "flock")


def trial_seed(base_seed: int, experiment_id: str,
               trial_index: int) -> np.random.SeedSequence:
    """Documented splitting rule: SeedSequence over (base seed,
    crc32(experiment id), trial index). Thread-count independent."""
    tag = zlib.crc32(experiment_id.encode("utf-8"))
    return np.random.SeedSequence([int(base_seed), tag, int(trial_index)])


def trial_rng(base_seed: int, experiment_id: str,
              trial_index: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(base_seed, experiment_id,
                                            trial_index))


def _parallel_map(fn, n: int, threads: int) -> list:
    """Run fn(trial_index) for 0..n-1 and gather results in index order.

    Each trial owns its generator, so the schedule cannot affect results.
    """
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


@dataclass
class ExperimentConfig:
    """Declarative experiment description; maps 1:1 onto the YAML schema.

    CLI flags override file values. Trial counts default to the published
    1000 where the study used that many; scale down for quick runs.
    """
    kind: str = "table1"
    seed: int = 0
    trials: int = 100
    threads: int = 1
    out: str | None = None
    epsilon: float = 1.0 / 3.0
    # table1: (l, trials) pairs
    table1_rows: tuple = ((10, 1000), (100, 100))
    r_cap: int = 400
    # rounds_vs_eps
    eps_grid: tuple = (0.15, 0.25, 0.35, 0.45)
    regimes: tuple = (("small", 4), ("large", 10))
    regime_spoofed: int = 2
    # tau studies
    tau_ks: tuple = (1, 2, 3, 4)
    tau_spoofed: tuple = (4, 12)
    fig7_epsilon: float = 0.1
    fig8_rounds: tuple = (10, 15, 20)
    fig8_spoofed: int = 8
    fig8_epsilon: float = 0.2
    box_sides: tuple = (3.0, 5.0)
    rgg_sizes: tuple = (10, 20, 30, 40)
    # connectivity inflation
    n_legit: int = 20
    spoofed_counts: tuple = (0, 5, 10, 15, 20)
    conn_box_side: float = 4.0
    # wmsr
    steps: int = 150
    noise_sigma: float = 0.5
    drift_rate: float = 0.05
    wmsr_trim: int = 1
    wmsr_rounds: int = 10
    # flock
    flock_seeds: int = 1
    duration: float = 60.0
    attack_time: float = 10.0
    resolve_delay: float = 0.1

    def __post_init__(self):
        if self.kind not in EXPERIMENTS:
            raise InputError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1 or self.threads < 1:
            raise InputError("trials and threads must be >= 1")
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        for key, val in d.items():
            if isinstance(val, list):
                d[key] = tuple(tuple(v) if isinstance(v, list) else v
                               for v in val)
        return cls(**d)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise InputError("config file must hold a mapping")
        return cls.from_dict(data)


def write_csv(rows: list, fieldnames: list) -> str:
    """Deterministic CSV text; floats rendered with repr."""
    buf = io.StringIO()
    buf.write(",".join(fieldnames) + "\n")
    for row in rows:
        cells = []
        for name in fieldnames:
            v = row[name]
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def save_csv(cfg: ExperimentConfig, name: str, text: str) -> str | None:
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(text)
    return str(path)


# --- world builders ---------------------------------------------------------

def table1_world(l: int, epsilon: float) -> World:
    """Complete graph with h = l/2 hidden and s = 10*l detectable robots."""
    g, roles = topology.complete_world(l, l // 2, 10 * l)
    return World(g, roles, ObservationChannel(epsilon))


def complete_regime_world(l: int, s: int, epsilon: float) -> World:
    g, roles = topology.complete_world(l, 0, s)
    return World(g, roles, ObservationChannel(epsilon))


def circulant_world(n_legit: int, k: int, s: int, epsilon: float) -> World:
    """Legitimate circulant ring C_n({1..k}) (min tau = k+1) plus s spoofed
    identities adjacent to every legitimate robot."""
    if not 1 <= k < n_legit // 2:
        raise InputError("circulant offset k out of range")
    n = n_legit + s
    edges = [(i, (i + d) % n_legit) for i in range(n_legit)
             for d in range(1, k + 1)]
    edges += [(j, i) for j in range(n_legit, n) for i in range(n_legit)]
    roles = np.full(n, int(Role.LEGITIMATE), dtype=np.int8)
    if s > 0:
        roles[n_legit] = int(Role.SPAWNING)
        roles[n_legit + 1:] = int(Role.SPOOFED)
    return World(CommGraph(n, edges), RoleAssignment(roles),
                 ObservationChannel(epsilon))


# --- runners ----------------------------------------------------------------

def smallest_success_round(world: World, algorithm: str, trials: int,
                           base_seed: int, experiment_id: str,
                           threshold: float = 0.5, r_cap: int = 400) -> int:
    """Smallest r whose empirical all-robot success rate reaches the
    threshold. Scanned linearly: the rate is not monotone in r (even round
    counts pay a tie penalty), so bisection is unsound."""
    for r in range(1, r_cap + 1):
        rng = trial_rng(base_seed, f"{experiment_id}/r={r}", 0)
        if algorithm == "baseline":
            rate = trust.baseline_success_rate(world, r, trials, rng)
        else:
            rate = trust.success_rate(world, r, trials, rng, algorithm)
        if rate >= threshold:
            return r
    raise DomainError(f"no round count up to {r_cap} reaches "
                      f"success rate {threshold}")


TABLE1_FIELDS = ["l", "n", "trials", "fsr_rounds", "baseline_rounds"]


def run_table1(cfg: ExperimentConfig) -> list:
    """Empirical minimum round counts on the complete-graph family."""
    rows = []
    for l, trials in cfg.table1_rows:
        world = table1_world(int(l), cfg.epsilon)
        exp = f"table1/l={l}"
        fsr = smallest_success_round(world, "fsr", int(trials), cfg.seed,
                                     exp + "/fsr", r_cap=cfg.r_cap)
        base = smallest_success_round(world, "baseline", int(trials),
                                      cfg.seed, exp + "/baseline",
                                      r_cap=cfg.r_cap)
        rows.append({"l": int(l), "n": world.graph.n, "trials": int(trials),
                     "fsr_rounds": fsr, "baseline_rounds": base})
    return rows


ROUNDS_EPS_FIELDS = ["regime", "l", "epsilon", "algorithm",
                     "mean_rounds", "std_rounds", "trials"]


def run_rounds_vs_epsilon(cfg: ExperimentConfig) -> list:
    """Average first-success round count vs epsilon for two neighborhood
    regimes (complete graphs of different legitimate counts)."""
    rows = []
    for regime, l in cfg.regimes:
        for eps in cfg.eps_grid:
            world = complete_regime_world(int(l), cfg.regime_spoofed,
                                          float(eps))
            for alg in ("fsr", "baseline"):
                exp = f"rounds_vs_eps/{regime}/eps={eps}/{alg}"
                rng = trial_rng(cfg.seed, exp, 0)
                rounds = trust.first_success_rounds(
                    world, cfg.trials, rng, alg, r_cap=cfg.r_cap)
                rows.append({"regime": regime, "l": int(l),
                             "epsilon": float(eps), "algorithm": alg,
                             "mean_rounds": float(rounds.mean()),
                             "std_rounds": float(rounds.std(ddof=1)),
                             "trials": cfg.trials})
    return rows


TAU_ROUNDS_FIELDS = ["s", "k", "min_tau", "mean_rounds", "std_rounds",
                     "trials"]
TAU_SUCCESS_FIELDS = ["r", "k", "min_tau", "success_rate", "trials"]
TAU_RGG_FIELDS = ["box_side", "n", "mean_min_tau", "trials"]


def run_tau_studies(cfg: ExperimentConfig) -> dict:
    """Three series: rounds-to-success vs min tau, fixed-r success rate vs
    min tau, and random-geometric mean min tau vs robot count."""
    rounds_rows = []
    for s in cfg.tau_spoofed:
        for k in cfg.tau_ks:
            world = circulant_world(16, int(k), int(s), cfg.fig7_epsilon)
            tau = topology.min_tau(world.graph, world.roles)
            exp = f"tau_rounds/s={s}/k={k}"
            rng = trial_rng(cfg.seed, exp, 0)
            rounds = trust.first_success_rounds(world, cfg.trials, rng,
                                                "fsr", r_cap=cfg.r_cap)
            rounds_rows.append({"s": int(s), "k": int(k), "min_tau": tau,
                                "mean_rounds": float(rounds.mean()),
                                "std_rounds": float(rounds.std(ddof=1)),
                                "trials": cfg.trials})

    success_rows = []
    for r in cfg.fig8_rounds:
        for k in cfg.tau_ks:
            world = circulant_world(16, int(k), cfg.fig8_spoofed,
                                    cfg.fig8_epsilon)
            tau = topology.min_tau(world.graph, world.roles)
            exp = f"tau_success/r={r}/k={k}"
            rng = trial_rng(cfg.seed, exp, 0)
            rate = trust.success_rate(world, int(r), cfg.trials, rng, "fsr")
            success_rows.append({"r": int(r), "k": int(k), "min_tau": tau,
                                 "success_rate": rate, "trials": cfg.trials})

    rgg_rows = []
    for box in cfg.box_sides:
        for n in cfg.rgg_sizes:
            exp = f"tau_rgg/box={box}/n={n}"

            def one(t, box=box, n=n, exp=exp):
                rng = trial_rng(cfg.seed, exp, t)
                g, _ = gen_random_geometric(int(n), float(box), rng)
                roles = RoleAssignment.all_legitimate(g.n)
                try:
                    return float(topology.min_tau(g, roles))
                except DomainError:
                    return 0.0

            taus = _parallel_map(one, cfg.trials, cfg.threads)
            rgg_rows.append({"box_side": float(box), "n": int(n),
                             "mean_min_tau": float(np.mean(taus)),
                             "trials": cfg.trials})
    return {"tau_rounds": rounds_rows, "tau_success": success_rows,
            "tau_rgg": rgg_rows}


CONNECTIVITY_FIELDS = ["spoofed", "mean_perceived", "mean_actual",
                       "std_gap", "trials"]


def run_connectivity_inflation(cfg: ExperimentConfig) -> list:
    """Mean perceived vs actual algebraic connectivity per spoofed count on
    random geometric placements."""
    rows = []
    for s in cfg.spoofed_counts:
        exp = f"connectivity/s={s}"

        def one(t, s=s, exp=exp):
            rng = trial_rng(cfg.seed, exp, t)
            n = cfg.n_legit + int(s)
            g, _ = gen_random_geometric(n, cfg.conn_box_side, rng)
            roles = np.full(n, int(Role.LEGITIMATE), dtype=np.int8)
            if s > 0:
                roles[cfg.n_legit] = int(Role.SPAWNING)
                roles[cfg.n_legit + 1:] = int(Role.SPOOFED)
            # the spawner is a physical robot; only spoofed ids vanish
            perceived, actual = estimation.perceived_vs_actual_connectivity(
                g, RoleAssignment(roles))
            return perceived, actual

        pairs = np.array(_parallel_map(one, cfg.trials, cfg.threads))
        gap = pairs[:, 0] - pairs[:, 1]
        rows.append({"spoofed": int(s),
                     "mean_perceived": float(pairs[:, 0].mean()),
                     "mean_actual": float(pairs[:, 1].mean()),
                     "std_gap": float(gap.std(ddof=1)),
                     "trials": cfg.trials})
    return rows


WMSR_FIELDS = ["mode", "t", "mean_error"]


def run_wmsr_scenarios(cfg: ExperimentConfig) -> list:
    """Consensus error under drifting spoofed broadcasts, with and without
    the trust prefilter."""
    g, roles = fixture_graph("fig3")
    world = World(g, roles, ObservationChannel(cfg.epsilon))
    target = np.zeros(2)
    rows = []
    for mode in ("wmsr", "fsr_then_wmsr"):
        rng = trial_rng(cfg.seed, f"wmsr/{mode}", 0)
        traj = consensus.run_target_agreement(
            world, mode, cfg.steps, rng, target=target,
            noise_sigma=cfg.noise_sigma,
            wmsr=consensus.WmsrParams(cfg.wmsr_trim),
            drift=consensus.DriftPolicy(cfg.drift_rate))
        err = consensus.legit_mean_error(traj, roles.legitimate, target)
        for t, e in enumerate(err):
            rows.append({"mode": mode, "t": t, "mean_error": float(e)})
    return rows


FLOCK_FIELDS = ["seed", "defense", "escaped", "time_to_escape",
                "final_dist"]


def run_flock_experiment(cfg: ExperimentConfig) -> list:
    """Defense-off and defense-on flock runs per seed index."""

    def one(t):
        out = []
        for defense in (False, True):
            sc = flocking.FlockScenario(
                duration=cfg.duration, defense=defense,
                attack=flocking.PushAttack(start_time=cfg.attack_time),
                resolve_delay=cfg.resolve_delay)
            rng = trial_rng(cfg.seed, f"flock/defense={int(defense)}", t)
            run = flocking.run_flock_scenario(sc, rng)
            out.append({"seed": t, "defense": int(defense),
                        "escaped": int(run.escaped),
                        "time_to_escape": float(run.time_to_escape),
                        "final_dist": float(run.centroid_dist[-1])})
        return out

    nested = _parallel_map(one, cfg.flock_seeds, cfg.threads)
    return [row for group in nested for row in group]


_RUNNERS = {
    "table1": (run_table1, TABLE1_FIELDS),
    "rounds_vs_eps": (run_rounds_vs_epsilon, ROUNDS_EPS_FIELDS),
    "connectivity": (run_connectivity_inflation, CONNECTIVITY_FIELDS),
    "wmsr": (run_wmsr_scenarios, WMSR_FIELDS),
    "flock": (run_flock_experiment, FLOCK_FIELDS),
}

_TAU_FIELDS = {"tau_rounds": TAU_ROUNDS_FIELDS,
               "tau_success": TAU_SUCCESS_FIELDS,
               "tau_rgg": TAU_RGG_FIELDS}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the configured experiment; returns {series name: csv text} and
    writes files when an output directory is set."""
    if cfg.kind == "tau_study":
        series = run_tau_studies(cfg)
        out = {name: write_csv(rows, _TAU_FIELDS[name])
               for name, rows in series.items()}
    else:
        runner, fields = _RUNNERS[cfg.kind]
        out = {cfg.kind: write_csv(runner(cfg), fields)}
    for name, text in out.items():
        save_csv(cfg, name, text)
    return out

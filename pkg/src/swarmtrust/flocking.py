"""Reynolds-style flocking with target tracking, push attacks, and
trust-filtered resilient control."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from swarmtrust.accel import get_kernels
from swarmtrust.errors import (InfeasibleTrackingError, InputError,
                               SingularityError)
from swarmtrust.topology import Role

_K = get_kernels()

D_MIN = 1e-3


@dataclass(frozen=True)
class Gains:
    """Controller gains and the velocity cap."""
    k_ref: float = 3.0
    k_avoid: float = 1.0
    k_match: float = 0.2
    u_max: float = 4.5

    def __post_init__(self):
        if min(self.k_ref, self.k_avoid, self.k_match) < 0 or self.k_ref == 0:
            raise InputError("gains must be non-negative with k_ref > 0")
        if self.u_max <= 0:
            raise InputError("u_max must be positive")

    def check_stable(self, t_s: float):
        if self.k_ref * t_s >= 1.0:
            raise InputError(
                f"k_ref*t_s = {self.k_ref * t_s} >= 1 is unstable")


@dataclass
class FlockState:
    """Positions/velocities of every identity plus the tracked target."""
    positions: np.ndarray        # (n, 3) meters
    velocities: np.ndarray       # (n, 3) m/s
    target_pos: np.ndarray       # (3,) meters
    target_vel: np.ndarray       # (3,) m/s
    t_s: float = 0.01
    step: int = 0

    def advance_target(self):
        self.target_pos = self.target_pos + self.t_s * self.target_vel


def control_input(i: int, state: FlockState, nbrs, gains: Gains) -> np.ndarray:
    """Velocity command for robot i: target attraction, inverse-square
    separation, and inverse-distance velocity matching, saturated to u_max."""
    nbrs = [j for j in nbrs if j != i]
    p_i = state.positions[i]
    v_i = state.velocities[i]
    cmd = gains.k_ref * (state.target_pos - p_i)
    for j in nbrs:
        diff = p_i - state.positions[j]
        d = float(np.linalg.norm(diff))
        if d == 0.0:
            raise SingularityError(
                f"robots {i} and {j} share a position")
        d = max(d, D_MIN)
        cmd = cmd + gains.k_avoid * diff / d**2
        cmd = cmd + gains.k_match * (state.velocities[j] - v_i) / d
    speed = float(np.linalg.norm(cmd))
    if speed > gains.u_max:
        cmd = cmd * (gains.u_max / speed)
    return cmd


def convergence_range(gains: Gains) -> float:
    """Maximum centroid-to-target distance recoverable by the controller."""
    return gains.u_max / gains.k_ref


def steady_trail(gains: Gains, vel_cen) -> float:
    """Converged trailing distance behind a target moving at vel_cen."""
    speed = float(np.linalg.norm(np.atleast_1d(vel_cen)))
    return speed / gains.k_ref


def escape_window(u_max: float, vel_cen: float, k_ref: float) -> float:
    """Minimum seconds an attack needs to push the centroid out of the
    recoverable range (scalar speeds)."""
    if u_max <= vel_cen:
        raise InfeasibleTrackingError(
            "target at least as fast as the robots; tracking infeasible")
    return (u_max - vel_cen) / (k_ref * (u_max + vel_cen))


def centroid_dynamics_closed_form(p_bar0, p_cen0, vel_cen, k_ref: float,
                                  t_s: float, t: int) -> np.ndarray:
    """Closed-form unsaturated centroid solution after t steps."""
    if k_ref * t_s >= 1.0:
        raise InputError("k_ref*t_s must be < 1 for stable dynamics")
    p_bar0 = np.asarray(p_bar0, dtype=np.float64)
    p_cen0 = np.asarray(p_cen0, dtype=np.float64)
    vel_cen = np.asarray(vel_cen, dtype=np.float64)
    p_cen_t = p_cen0 + t * t_s * vel_cen
    trail = vel_cen / k_ref
    return p_cen_t - trail + (p_bar0 - p_cen0 + trail) * (1 - k_ref * t_s) ** t


@dataclass(frozen=True)
class PushAttack:
    """Sybil push attack: each malicious identity steers its broadcast
    position toward a point a small gap ahead (along the target heading) of
    a claimed legitimate robot so the separation term repels that robot
    away from the target. Broadcasts move at most u_max per second so the
    claimed trajectories stay physically plausible (symmetric capability)."""
    gap: float = 0.12
    start_time: float = 10.0

    def __post_init__(self):
        if self.gap <= 0:
            raise InputError("push gap must be positive")


def assign_victims(adv_pos: np.ndarray, legit_pos: np.ndarray) -> np.ndarray:
    """Greedy distinct victim per adversary: each pusher claims its nearest
    still-unclaimed legitimate robot (wrapping if outnumbered)."""
    claimed: list = []
    for a in range(adv_pos.shape[0]):
        d = np.linalg.norm(legit_pos - adv_pos[a][None, :], axis=1)
        order = np.argsort(d)
        free = [int(v) for v in order if v not in claimed]
        pick = free[0] if free else int(order[0])
        claimed.append(pick)
    return np.array(claimed, dtype=np.int64)


def attack_command(bpos: np.ndarray, victim_pos: np.ndarray,
                   heading: np.ndarray, attack: PushAttack, u_max: float,
                   t_s: float, target_vel: np.ndarray) -> tuple:
    """One adversary broadcast update: glide toward the push goal at most
    u_max, claiming a cruising velocity to keep the match term quiet."""
    goal = victim_pos + attack.gap * heading
    step = goal - bpos
    nrm = float(np.linalg.norm(step))
    limit = u_max * t_s
    if nrm > limit:
        step = step * (limit / nrm)
    return bpos + step, np.array(target_vel, dtype=np.float64)


@dataclass
class FlockScenario:
    """Flock-versus-escaping-target scenario with a mid-run Sybil attack.

    n_legit robots plus n_hacked robots that turn adversarial at the attack
    start, each spawning one spoofed identity. With defense enabled, trust
    resolves `resolve_delay` seconds after the attack begins and all
    detectable identities are rejected; hacked robots remain physical
    obstacles avoided via their sensed true positions.
    """
    n_legit: int = 10
    n_hacked: int = 3
    gains: Gains = field(default_factory=Gains)
    t_s: float = 0.01
    duration: float = 60.0
    target_pos0: tuple = (1.0, 1.0, 0.0)
    target_vel: tuple = (2.0, 0.0, 0.0)
    attack: PushAttack = field(default_factory=PushAttack)
    defense: bool = False
    resolve_delay: float = 0.1
    spawn_per_hacked: int = 1
    sense_radius: float = 0.8
    spawn_offset: float = 1.0

    def __post_init__(self):
        self.gains.check_stable(self.t_s)
        if self.gains.u_max <= float(np.linalg.norm(self.target_vel)):
            raise InfeasibleTrackingError("u_max must exceed target speed")

    @property
    def n_spoofed(self):
        return self.n_hacked * self.spawn_per_hacked

    @property
    def n_ids(self):
        return self.n_legit + self.n_hacked + self.n_spoofed

    def roles(self) -> np.ndarray:
        r = np.full(self.n_ids, int(Role.LEGITIMATE), dtype=np.int8)
        r[self.n_legit:self.n_legit + self.n_hacked] = int(Role.SPAWNING)
        r[self.n_legit + self.n_hacked:] = int(Role.SPOOFED)
        return r


@dataclass
class FlockRun:
    """Recorded scenario outcome."""
    times: np.ndarray            # (steps,)
    centroid_dist: np.ndarray    # (steps,) legit centroid to target
    in_range: np.ndarray         # (steps,) bool
    escaped: bool
    time_to_escape: float        # seconds from attack start; inf if never
    positions: np.ndarray        # (steps, n, 3)
    velocities: np.ndarray       # (steps, n, 3)
    target: np.ndarray           # (steps, 3)
    roles: np.ndarray


def run_flock_scenario(sc: FlockScenario, rng: np.random.Generator) -> FlockRun:
    """Simulate the scenario with synchronous broadcast snapshots and
    explicit Euler integration.

    Influence is proximity-limited: a robot reacts to identities whose
    (broadcast) position lies within sense_radius. After the attack the
    hacked robots cruise along the heading while all malicious identities
    glide their broadcasts onto distinct legitimate victims; with defense
    resolved, spoofed identities are dropped and hacked robots are avoided
    via their sensed true state."""
    n_l, n_h, n_s = sc.n_legit, sc.n_hacked, sc.n_spoofed
    n_phys = n_l + n_h
    n_ids = sc.n_ids
    gains = sc.gains
    dtype = np.float64

    target = np.array(sc.target_pos0, dtype=dtype)
    vel_cen = np.array(sc.target_vel, dtype=dtype)
    heading = vel_cen / np.linalg.norm(vel_cen)

    pos = np.zeros((n_ids, 3), dtype=dtype)
    # physical robots start scattered behind the target
    pos[:n_phys, 0] = target[0] - rng.uniform(1.0, 5.0, n_phys)
    pos[:n_phys, 1] = target[1] + rng.uniform(-2.0, 2.0, n_phys)
    pos[:n_phys, 2] = rng.uniform(-2.0, 2.0, n_phys)
    vel = np.zeros((n_ids, 3), dtype=dtype)
    bpos = pos.copy()
    bvel = vel.copy()

    steps = int(round(sc.duration / sc.t_s))
    attack_step = int(round(sc.attack.start_time / sc.t_s))
    resolve_step = attack_step + int(round(sc.resolve_delay / sc.t_s))
    legit_ids = np.arange(n_l)
    mal_ids = np.arange(n_l, n_ids)

    rng_range = convergence_range(gains)
    times = np.empty(steps)
    cdist = np.empty(steps)
    inrng = np.empty(steps, dtype=bool)
    pos_hist = np.empty((steps, n_ids, 3), dtype=dtype)
    vel_hist = np.empty((steps, n_ids, 3), dtype=dtype)
    tgt_hist = np.empty((steps, 3), dtype=dtype)
    escape_time = np.inf
    spawned = False

    for t in range(steps):
        now = t * sc.t_s
        attacking = t >= attack_step
        resolved = sc.defense and attacking and t >= resolve_step

        if attacking and not spawned:
            # spoofed broadcasts appear near the legitimate robot closest
            # to their spawner, offset toward the target
            for h in range(n_h):
                spawner = n_l + h
                d = np.linalg.norm(pos[legit_ids] - pos[spawner][None, :],
                                   axis=1)
                victim = int(np.argmin(d))
                for c in range(sc.spawn_per_hacked):
                    sp = n_phys + h * sc.spawn_per_hacked + c
                    pos[sp] = pos[victim] + sc.spawn_offset * heading
            spawned = True

        bpos[:n_phys] = pos[:n_phys]
        bvel[:n_phys] = vel[:n_phys]
        if attacking:
            victims = assign_victims(bpos[mal_ids], pos[legit_ids])
            for k, a in enumerate(mal_ids):
                bpos[a], bvel[a] = attack_command(
                    bpos[a], pos[victims[k]], heading, sc.attack,
                    gains.u_max, sc.t_s, vel_cen)

        if not attacking:
            # cooperative phase: spawned ids do not exist yet
            dmat = np.linalg.norm(
                pos[:n_phys, None, :] - bpos[None, :n_phys, :], axis=2)
            infl = dmat <= sc.sense_radius
            np.fill_diagonal(infl, False)
            cmd = _K.flock_velocities(
                pos[:n_phys], vel[:n_phys], bpos[:n_phys], bvel[:n_phys],
                infl, gains.k_ref, gains.k_avoid, gains.k_match,
                gains.u_max, target, D_MIN)
            vel[:n_phys] = cmd
            pos[:n_phys] += sc.t_s * cmd
        else:
            use_pos, use_vel = bpos, bvel
            if resolved:
                # spoofed identities rejected outright; hacked robots
                # remain sensed physical obstacles (true state)
                use_pos = bpos.copy()
                use_vel = bvel.copy()
                use_pos[n_l:n_phys] = pos[n_l:n_phys]
                use_vel[n_l:n_phys] = vel[n_l:n_phys]
            dmat = np.linalg.norm(
                pos[legit_ids][:, None, :] - use_pos[None, :, :], axis=2)
            infl = dmat <= sc.sense_radius
            infl[np.arange(n_l), legit_ids] = False
            if resolved:
                infl[:, n_phys:] = False
            cmd = _K.flock_velocities(
                pos[legit_ids], vel[legit_ids], use_pos, use_vel, infl,
                gains.k_ref, gains.k_avoid, gains.k_match, gains.u_max,
                target, D_MIN)
            vel[legit_ids] = cmd
            pos[legit_ids] += sc.t_s * cmd
            # hacked robots cruise along the heading; spoofed identities
            # ride on their falsified broadcasts
            vel[n_l:n_phys] = vel_cen
            pos[n_l:n_phys] += sc.t_s * vel_cen
            pos[n_phys:] = bpos[n_phys:]
            vel[n_phys:] = bvel[n_phys:]

        target = target + sc.t_s * vel_cen

        centroid = pos[legit_ids].mean(axis=0)
        d = float(np.linalg.norm(centroid - target))
        times[t] = now
        cdist[t] = d
        inrng[t] = d <= rng_range
        pos_hist[t] = pos
        vel_hist[t] = vel
        tgt_hist[t] = target
        if attacking and not inrng[t] and not np.isfinite(escape_time):
            escape_time = now - sc.attack.start_time

    return FlockRun(times, cdist, inrng, bool(np.isfinite(escape_time)),
                    float(escape_time), pos_hist, vel_hist, tgt_hist,
                    sc.roles())


def simulate_unsaturated_centroid(n: int, gains: Gains, t_s: float,
                                  steps: int, target0, vel_cen,
                                  rng: np.random.Generator) -> tuple:
    """Adversary-free run without the velocity cap; returns the simulated
    centroid trajectory and its closed-form prediction."""
    free = Gains(gains.k_ref, gains.k_avoid, gains.k_match, u_max=1e12)
    free.check_stable(t_s)
    target = np.array(target0, dtype=np.float64)
    vel_cen = np.array(vel_cen, dtype=np.float64)
    pos = np.zeros((n, 3))
    pos[:, 0] = target[0] - rng.uniform(1.0, 5.0, n)
    pos[:, 1] = target[1] + rng.uniform(-2.0, 2.0, n)
    vel = np.zeros((n, 3))
    p_bar0 = pos.mean(axis=0).copy()
    p_cen0 = target.copy()
    infl = ~np.eye(n, dtype=bool)

    sim = np.empty((steps + 1, 3))
    ref = np.empty((steps + 1, 3))
    sim[0] = p_bar0
    ref[0] = p_bar0
    for t in range(1, steps + 1):
        cmd = _K.flock_velocities(pos, vel, pos, vel, infl, free.k_ref,
                                  free.k_avoid, free.k_match, free.u_max,
                                  target, D_MIN)
        vel = cmd
        pos = pos + t_s * cmd
        target = target + t_s * vel_cen
        sim[t] = pos.mean(axis=0)
        ref[t] = centroid_dynamics_closed_form(
            p_bar0, p_cen0, vel_cen, free.k_ref, t_s, t)
    return sim, ref


def run_to_csv(run: FlockRun) -> str:
    """Trajectory CSV: one row per (step, identity)."""
    buf = io.StringIO()
    buf.write("t,id,role,px,py,pz,vx,vy,vz,"
              "target_x,target_y,target_z,in_range\n")
    steps, n, _ = run.positions.shape
    for t in range(steps):
        tx, ty, tz = run.target[t]
        flag = int(run.in_range[t])
        for i in range(n):
            px, py, pz = run.positions[t, i]
            vx, vy, vz = run.velocities[t, i]
            buf.write(f"{run.times[t]!r},{i},{int(run.roles[i])},"
                      f"{px!r},{py!r},{pz!r},{vx!r},{vy!r},{vz!r},"
                      f"{tx!r},{ty!r},{tz!r},{flag}\n")
    return buf.getvalue()

"""Pure-numpy fallback kernels.

Same contracts as :mod:`swarmtrust.kernels_jit`; used when numba is disabled
or unavailable (see :mod:`swarmtrust.accel`).
"""
import numpy as np


def flock_velocities(pos, vel, bpos, bvel, influence,
                     k_ref, k_avoid, k_match, u_max, target, d_min):
    """Velocity commands for controlled robots.

    pos, vel: (m, 3) true state of the controlled robots.
    bpos, bvel: (k, 3) broadcast/sensed state of every influencing identity.
    influence: (m, k) bool, which identities enter robot a's avoid/match sums.
    Distances are clamped below at d_min. Output saturated to magnitude u_max.
    """
    diff = pos[:, None, :] - bpos[None, :, :]          # (m, k, 3)
    dist = np.linalg.norm(diff, axis=2)
    dist = np.maximum(dist, d_min)
    w = influence.astype(pos.dtype)
    avoid = k_avoid * np.einsum("ak,aki->ai", w / dist**2, diff)
    vdiff = bvel[None, :, :] - vel[:, None, :]
    match = k_match * np.einsum("ak,aki->ai", w / dist, vdiff)
    cmd = k_ref * (target[None, :] - pos) + avoid + match
    speed = np.linalg.norm(cmd, axis=1)
    over = speed > u_max
    if np.any(over):
        cmd[over] *= (u_max / speed[over])[:, None]
    return cmd


def wmsr_round(values, nbr_mask, update_mask, trim):
    """One synchronous W-MSR round over scalar values.

    nbr_mask: (n, n) bool adjacency without self-loops. For each i with
    update_mask[i], discard up to `trim` neighbor values strictly greater
    than values[i] and up to `trim` strictly less, then average the retained
    neighbor values together with values[i]. Other nodes keep their value.
    """
    n = values.shape[0]
    out = values.copy()
    vmat = np.where(nbr_mask, values[None, :], np.nan)
    svals = np.sort(vmat, axis=1)                       # NaNs sort last
    deg = nbr_mask.sum(axis=1)
    greater = np.nansum(vmat > values[:, None], axis=1).astype(np.int64)
    less = np.nansum(vmat < values[:, None], axis=1).astype(np.int64)
    k_hi = np.minimum(trim, greater)
    k_lo = np.minimum(trim, less)
    prefix = np.concatenate(
        [np.zeros((n, 1)), np.nancumsum(svals, axis=1)], axis=1)
    total = prefix[np.arange(n), deg]
    low_sum = prefix[np.arange(n), k_lo]
    hi_sum = total - prefix[np.arange(n), deg - k_hi]
    kept = deg - k_lo - k_hi
    upd = update_mask & (deg > 0)
    out[upd] = ((total - low_sum - hi_sum + values)[upd]
                / (kept + 1)[upd])
    # isolated updating nodes keep their own value
    return out


def tau_min(adj_self, legit, hidden):
    """Minimum tau over legitimate i and adjacent j != i.

    adj_self: (n, n) bool self-inclusive adjacency. tau(i, j) counts common
    self-inclusive neighbors that are legitimate minus those that are hidden.
    Returns (min_tau, found) where found is False if no legitimate node has
    a neighbor.
    """
    a = adj_self.astype(np.int64)
    l_common = (a * legit[None, :]) @ a.T
    h_common = (a * hidden[None, :]) @ a.T
    tau = l_common - h_common
    pair = adj_self.copy()
    np.fill_diagonal(pair, False)
    pair &= legit[:, None]
    if not pair.any():
        return 0, False
    return int(tau[pair].min()), True

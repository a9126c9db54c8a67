"""Numba-compiled loop kernels. Contracts match :mod:`swarmtrust.kernels_np`."""
import numpy as np
from numba import njit


@njit(cache=True)
def flock_velocities(pos, vel, bpos, bvel, influence,
                     k_ref, k_avoid, k_match, u_max, target, d_min):
    m = pos.shape[0]
    k = bpos.shape[0]
    cmd = np.empty((m, 3), dtype=pos.dtype)
    for a in range(m):
        cx = k_ref * (target[0] - pos[a, 0])
        cy = k_ref * (target[1] - pos[a, 1])
        cz = k_ref * (target[2] - pos[a, 2])
        for b in range(k):
            if not influence[a, b]:
                continue
            dx = pos[a, 0] - bpos[b, 0]
            dy = pos[a, 1] - bpos[b, 1]
            dz = pos[a, 2] - bpos[b, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d < d_min:
                d = d_min
            inv2 = k_avoid / (d * d)
            cx += inv2 * dx
            cy += inv2 * dy
            cz += inv2 * dz
            inv1 = k_match / d
            cx += inv1 * (bvel[b, 0] - vel[a, 0])
            cy += inv1 * (bvel[b, 1] - vel[a, 1])
            cz += inv1 * (bvel[b, 2] - vel[a, 2])
        speed = np.sqrt(cx * cx + cy * cy + cz * cz)
        if speed > u_max:
            scale = u_max / speed
            cx *= scale
            cy *= scale
            cz *= scale
        cmd[a, 0] = cx
        cmd[a, 1] = cy
        cmd[a, 2] = cz
    return cmd


@njit(cache=True)
def wmsr_round(values, nbr_mask, update_mask, trim):
    n = values.shape[0]
    out = values.copy()
    buf = np.empty(n, dtype=values.dtype)
    for i in range(n):
        if not update_mask[i]:
            continue
        deg = 0
        for j in range(n):
            if nbr_mask[i, j]:
                buf[deg] = values[j]
                deg += 1
        if deg == 0:
            continue
        nb = np.sort(buf[:deg])
        greater = 0
        less = 0
        for t in range(deg):
            if nb[t] > values[i]:
                greater += 1
            elif nb[t] < values[i]:
                less += 1
        k_hi = trim if greater > trim else greater
        k_lo = trim if less > trim else less
        total = values[i]
        count = 1
        for t in range(k_lo, deg - k_hi):
            total += nb[t]
            count += 1
        out[i] = total / count
    return out


@njit(cache=True)
def tau_min(adj_self, legit, hidden):
    n = adj_self.shape[0]
    best = 0
    found = False
    for i in range(n):
        if not legit[i]:
            continue
        for j in range(n):
            if i == j or not adj_self[i, j]:
                continue
            tau = 0
            for k in range(n):
                if adj_self[i, k] and adj_self[j, k]:
                    if legit[k]:
                        tau += 1
                    elif hidden[k]:
                        tau -= 1
            if not found or tau < best:
                best = tau
                found = True
    return best, found

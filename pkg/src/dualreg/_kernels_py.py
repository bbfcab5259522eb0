"""Pure-numpy implementations of the hot kernels.

These mirror the compiled extension exactly, including floating-point
evaluation order (explicit componentwise expressions, no BLAS), so either
backend produces bit-identical pipelines. Keep the two files in sync.
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False

_BLOCK = 512  # row block for pairwise matrices, bounds temporary memory


def initial_consensus_mask(v, u, ns, nt, seed, two_tau, delta):
    """Seed-relative consensus test over all correspondences.

    For each i: length discrepancy |  ||v_i-v_s|| - ||u_i-u_s||  | < two_tau
    and tangential distance max(|d_is^s - d_is^t|, |d_si^s - d_si^t|) < delta.
    Returns a bool mask of length M; the seed itself always passes.
    """
    dvx = v[:, 0] - v[seed, 0]
    dvy = v[:, 1] - v[seed, 1]
    dvz = v[:, 2] - v[seed, 2]
    dux = u[:, 0] - u[seed, 0]
    duy = u[:, 1] - u[seed, 1]
    duz = u[:, 2] - u[seed, 2]
    ls = np.sqrt(dvx * dvx + dvy * dvy + dvz * dvz)
    lt = np.sqrt(dux * dux + duy * duy + duz * duz)
    d_l = np.abs(ls - lt)

    d_is_s = np.abs(dvx * ns[:, 0] + dvy * ns[:, 1] + dvz * ns[:, 2])
    d_is_t = np.abs(dux * nt[:, 0] + duy * nt[:, 1] + duz * nt[:, 2])
    d_si_s = np.abs(dvx * ns[seed, 0] + dvy * ns[seed, 1] + dvz * ns[seed, 2])
    d_si_t = np.abs(dux * nt[seed, 0] + duy * nt[seed, 1] + duz * nt[seed, 2])
    d_n = np.maximum(np.abs(d_is_s - d_is_t), np.abs(d_si_s - d_si_t))
    return (d_l < two_tau) & (d_n < delta)


def _pairwise_violations(vm, um, two_tau):
    m = len(vm)
    viol = np.zeros((m, m), dtype=bool)
    vx, vy, vz = vm[:, 0], vm[:, 1], vm[:, 2]
    ux, uy, uz = um[:, 0], um[:, 1], um[:, 2]
    for start in range(0, m, _BLOCK):
        rows = slice(start, min(start + _BLOCK, m))
        dvx = vx[rows, None] - vx[None, :]
        dvy = vy[rows, None] - vy[None, :]
        dvz = vz[rows, None] - vz[None, :]
        dux = ux[rows, None] - ux[None, :]
        duy = uy[rows, None] - uy[None, :]
        duz = uz[rows, None] - uz[None, :]
        ls = np.sqrt(dvx * dvx + dvy * dvy + dvz * dvz)
        lt = np.sqrt(dux * dux + duy * duy + duz * duz)
        viol[rows] = np.abs(ls - lt) >= two_tau
    np.fill_diagonal(viol, False)
    return viol


def greedy_pairwise_keep(vm, um, two_tau):
    """Greedy elimination to a pairwise length-consistent subset.

    Repeatedly drops the member with the most violations against the
    current members (ties -> drop the larger index) until none remain.
    Returns the keep mask of length m.
    """
    m = len(vm)
    keep = np.ones(m, dtype=bool)
    if m <= 1:
        return keep
    viol = _pairwise_violations(vm, um, two_tau)
    counts = viol.sum(axis=1).astype(np.int64)
    while True:
        worst = int(counts.max())
        if worst <= 0:
            break
        drop = int(np.nonzero(counts == worst)[0][-1])
        keep[drop] = False
        counts -= viol[drop]
        counts[drop] = -1
    return keep


def transform_inlier_mask(v, u, rot, t, gamma):
    """Mask of pairs with ||R v + t - u|| strictly below gamma."""
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    dx = rot[0, 0] * x + rot[0, 1] * y + rot[0, 2] * z + t[0] - u[:, 0]
    dy = rot[1, 0] * x + rot[1, 1] * y + rot[1, 2] * z + t[1] - u[:, 1]
    dz = rot[2, 0] * x + rot[2, 1] * y + rot[2, 2] * z + t[2] - u[:, 2]
    return dx * dx + dy * dy + dz * dz < gamma * gamma

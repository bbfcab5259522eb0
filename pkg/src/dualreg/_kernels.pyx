# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels.

Semantics and floating-point evaluation order must stay identical to
_kernels_py.py, which is the reference for both behavior and tests.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

IS_COMPILED = True


def initial_consensus_mask(const double[:, ::1] v, const double[:, ::1] u,
                           const double[:, ::1] ns, const double[:, ::1] nt,
                           Py_ssize_t seed, double two_tau, double delta):
    """Seed-relative consensus test; see _kernels_py for the contract."""
    cdef Py_ssize_t m = v.shape[0]
    out = np.zeros(m, dtype=bool)
    cdef cnp.uint8_t[::1] mask = out.view(np.uint8)
    cdef double vsx = v[seed, 0], vsy = v[seed, 1], vsz = v[seed, 2]
    cdef double usx = u[seed, 0], usy = u[seed, 1], usz = u[seed, 2]
    cdef double nsx = ns[seed, 0], nsy = ns[seed, 1], nsz = ns[seed, 2]
    cdef double ntx = nt[seed, 0], nty = nt[seed, 1], ntz = nt[seed, 2]
    cdef double dvx, dvy, dvz, dux, duy, duz, ls, lt
    cdef double d_is_s, d_is_t, d_si_s, d_si_t, a, b, d_n
    cdef Py_ssize_t i
    for i in range(m):
        dvx = v[i, 0] - vsx
        dvy = v[i, 1] - vsy
        dvz = v[i, 2] - vsz
        dux = u[i, 0] - usx
        duy = u[i, 1] - usy
        duz = u[i, 2] - usz
        ls = sqrt(dvx * dvx + dvy * dvy + dvz * dvz)
        lt = sqrt(dux * dux + duy * duy + duz * duz)
        if fabs(ls - lt) >= two_tau:
            continue
        d_is_s = fabs(dvx * ns[i, 0] + dvy * ns[i, 1] + dvz * ns[i, 2])
        d_is_t = fabs(dux * nt[i, 0] + duy * nt[i, 1] + duz * nt[i, 2])
        d_si_s = fabs(dvx * nsx + dvy * nsy + dvz * nsz)
        d_si_t = fabs(dux * ntx + duy * nty + duz * ntz)
        a = fabs(d_is_s - d_is_t)
        b = fabs(d_si_s - d_si_t)
        d_n = a if a > b else b
        if d_n < delta:
            mask[i] = 1
    return out


def greedy_pairwise_keep(const double[:, ::1] vm, const double[:, ::1] um, double two_tau):
    """Greedy elimination to a pairwise-consistent subset; see _kernels_py."""
    cdef Py_ssize_t m = vm.shape[0]
    out = np.ones(m, dtype=bool)
    if m <= 1:
        return out
    cdef cnp.uint8_t[::1] keep = out.view(np.uint8)
    viol_arr = np.zeros((m, m), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] viol = viol_arr
    counts_arr = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double dvx, dvy, dvz, dux, duy, duz, ls, lt
    cdef Py_ssize_t i, k, drop
    cdef cnp.int64_t worst
    for i in range(m):
        for k in range(i + 1, m):
            dvx = vm[i, 0] - vm[k, 0]
            dvy = vm[i, 1] - vm[k, 1]
            dvz = vm[i, 2] - vm[k, 2]
            dux = um[i, 0] - um[k, 0]
            duy = um[i, 1] - um[k, 1]
            duz = um[i, 2] - um[k, 2]
            ls = sqrt(dvx * dvx + dvy * dvy + dvz * dvz)
            lt = sqrt(dux * dux + duy * duy + duz * duz)
            if fabs(ls - lt) >= two_tau:
                viol[i, k] = 1
                viol[k, i] = 1
                counts[i] += 1
                counts[k] += 1
    while True:
        worst = counts[0]
        drop = 0
        for i in range(1, m):
            if counts[i] >= worst:
                worst = counts[i]
                drop = i
        if worst <= 0:
            break
        keep[drop] = 0
        for k in range(m):
            counts[k] -= viol[drop, k]
        counts[drop] = -1
    return out


def transform_inlier_mask(const double[:, ::1] v, const double[:, ::1] u,
                          const double[:, ::1] rot, const double[::1] t, double gamma):
    """Mask of pairs with ||R v + t - u|| strictly below gamma."""
    cdef Py_ssize_t m = v.shape[0]
    out = np.zeros(m, dtype=bool)
    cdef cnp.uint8_t[::1] mask = out.view(np.uint8)
    cdef double r00 = rot[0, 0], r01 = rot[0, 1], r02 = rot[0, 2]
    cdef double r10 = rot[1, 0], r11 = rot[1, 1], r12 = rot[1, 2]
    cdef double r20 = rot[2, 0], r21 = rot[2, 1], r22 = rot[2, 2]
    cdef double t0 = t[0], t1 = t[1], t2 = t[2]
    cdef double g2 = gamma * gamma
    cdef double x, y, z, dx, dy, dz
    cdef Py_ssize_t i
    for i in range(m):
        x = v[i, 0]
        y = v[i, 1]
        z = v[i, 2]
        dx = r00 * x + r01 * y + r02 * z + t0 - u[i, 0]
        dy = r10 * x + r11 * y + r12 * z + t1 - u[i, 1]
        dz = r20 * x + r21 * y + r22 * z + t2 - u[i, 2]
        if dx * dx + dy * dy + dz * dz < g2:
            mask[i] = 1
    return out

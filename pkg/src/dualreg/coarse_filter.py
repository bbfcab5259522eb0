"""One-point RANSAC coarse filter.

Each iteration samples a single correspondence, builds its consensus set
from length and tangential-distance consistency, rejects mirror-symmetric
sets, and scores the members. The best-scoring consensus set over all
sampled seeds is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import OrientedPointCloud
from .config import ResolvedParams
from .correspondences import CorrespondenceSet
from .errors import InsufficientCorrespondencesError
from .kabsch import solve_orthogonal

# Iteration cap when the estimated inlier ratio stays tiny.
HARD_CAP_MULTIPLE = 10


@dataclass(frozen=True)
class CorrespondenceView:
    """Gathered endpoint geometry of a correspondence set, kernel-ready."""

    v: np.ndarray   # source positions (M, 3)
    u: np.ndarray   # target positions (M, 3)
    ns: np.ndarray  # source normals (M, 3)
    nt: np.ndarray  # target normals (M, 3)

    @staticmethod
    def from_set(cset: CorrespondenceSet, source: OrientedPointCloud,
                 target: OrientedPointCloud) -> "CorrespondenceView":
        v, u, ns, nt = cset.gather(source, target)
        return CorrespondenceView(*(np.ascontiguousarray(a) for a in (v, u, ns, nt)))

    def __len__(self) -> int:
        return len(self.v)


@dataclass(frozen=True)
class ConsensusSet:
    """A seed correspondence and its pairwise-consistent companions."""

    seed: int
    members: np.ndarray  # sorted ascending, includes seed

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.intp)
        if self.seed not in members:
            raise ValueError("seed must be a member of its consensus set")
        if np.any(np.diff(members) <= 0):
            raise ValueError("members must be sorted ascending without duplicates")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)


def _dist(p: np.ndarray, q: np.ndarray) -> float:
    # Componentwise, in the same evaluation order as the kernels.
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    dz = p[2] - q[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def _absdot(d: np.ndarray, n: np.ndarray) -> float:
    return abs(d[0] * n[0] + d[1] * n[1] + d[2] * n[2])


def length_discrepancy(view: CorrespondenceView, i: int, j: int) -> float:
    """|  ||v_i - v_j|| - ||u_i - u_j||  |, zero for rigid-consistent pairs."""
    return abs(_dist(view.v[i], view.v[j]) - _dist(view.u[i], view.u[j]))


def tangential_distance(view: CorrespondenceView, i: int, j: int) -> float:
    """Worst-side discrepancy of point-to-plane gaps along endpoint normals.

    Uses absolute projections, so it is insensitive to normal sign flips.
    """
    dv = view.v[i] - view.v[j]
    du = view.u[i] - view.u[j]
    d_ij_s = _absdot(dv, view.ns[i])
    d_ij_t = _absdot(du, view.nt[i])
    d_ji_s = _absdot(dv, view.ns[j])
    d_ji_t = _absdot(du, view.nt[j])
    return max(abs(d_ij_s - d_ij_t), abs(d_ji_s - d_ji_t))


def initial_consensus(view: CorrespondenceView, seed: int,
                      params: ResolvedParams) -> np.ndarray:
    """Indices consistent with the seed: D_L < 2*tau and D_N < delta."""
    mask = kernels.initial_consensus_mask(
        view.v, view.u, view.ns, view.nt, seed, 2.0 * params.tau, params.delta)
    return np.nonzero(mask)[0]


def pairwise_consensus(view: CorrespondenceView, seed: int, initial: np.ndarray,
                       params: ResolvedParams) -> ConsensusSet:
    """Reduce the seed's initial consensus to a pairwise-consistent subset.

    Greedy elimination: drop the member with the most D_L violations against
    the current members (ties -> larger index) until none remain. The seed
    has no violations by construction, so it survives.
    """
    initial = np.asarray(initial, dtype=np.intp)
    vm = np.ascontiguousarray(view.v[initial])
    um = np.ascontiguousarray(view.u[initial])
    keep = kernels.greedy_pairwise_keep(vm, um, 2.0 * params.tau)
    return ConsensusSet(seed=seed, members=initial[keep])


def symmetry_check(view: CorrespondenceView, members: np.ndarray) -> bool:
    """True when the two sides are related by a reflection (set must be rejected).

    Sets with fewer than 3 members or a rank-deficient cross-covariance
    cannot encode the ambiguity and are treated as non-symmetric.
    """
    if len(members) < 3:
        return False
    m = solve_orthogonal(view.v[members], view.u[members])
    if m is None:
        return False
    return bool(np.linalg.det(m) < 0.0)


def termination_bound(n_inliers: int, n_total: int, lambda_conf: float,
                      sample_size: int = 1) -> int:
    """Iterations needed to hit confidence lambda_conf at the given inlier count.

    ceil(log(1 - lambda) / log(1 - (n_inliers/n_total)^sample_size)); returns
    1 when every correspondence is an inlier.
    """
    if n_total <= 0:
        raise ValueError("n_total must be positive")
    if not 1 <= n_inliers <= n_total:
        raise ValueError(f"n_inliers must be in [1, {n_total}], got {n_inliers}")
    if n_inliers == n_total:
        return 1
    ratio = (n_inliers / n_total) ** sample_size
    return math.ceil(math.log(1.0 - lambda_conf) / math.log(1.0 - ratio))


@dataclass
class CoarseFilterResult:
    selected: CorrespondenceSet   # the winning consensus set, final scores attached
    indices: np.ndarray           # members of that set, as indices into the input
    scores: np.ndarray            # final score of every input correspondence
    low_confidence: bool          # True when every consensus set was rejected
    iterations: int
    est_inliers: int              # final running inlier-count estimate


def run_coarse_filter(cset: CorrespondenceSet, source: OrientedPointCloud,
                      target: OrientedPointCloud, params: ResolvedParams,
                      rng: np.random.Generator) -> CoarseFilterResult:
    """One-point RANSAC over the input correspondences.

    Seeds are drawn uniformly with replacement; the iteration budget adapts
    to the running inlier estimate and is additionally capped at
    HARD_CAP_MULTIPLE * |input|. Deterministic given the rng state.
    """
    m = len(cset)
    if m < 1:
        raise InsufficientCorrespondencesError("coarse filter needs at least 1 correspondence")
    view = CorrespondenceView.from_set(cset, source, target)

    scores = np.zeros(m, dtype=np.int64)
    saved: dict[int, np.ndarray] = {}
    n_est = 1
    k_max = math.inf
    hard_cap = HARD_CAP_MULTIPLE * m
    best_init = np.empty(0, dtype=np.intp)
    empty = np.empty(0, dtype=np.intp)

    k = 1
    while k < k_max and k <= hard_cap:
        seed = int(rng.integers(m))
        init = initial_consensus(view, seed, params)
        if len(init) > len(best_init):
            best_init = init
        members = pairwise_consensus(view, seed, init, params).members
        if symmetry_check(view, members):
            members = empty
        saved[seed] = members
        if len(members) > params.alpha * n_est:
            scores[members] += 1
        n_est = max(n_est, len(members))
        k_max = termination_bound(n_est, m, params.lambda_conf)
        k += 1

    best_members = None
    best_total = -1
    for seed in sorted(saved):
        members = saved[seed]
        if len(members) == 0:
            continue
        total = int(scores[members].sum())
        if total > best_total:
            best_total = total
            best_members = members

    low_confidence = best_members is None
    if low_confidence:
        best_members = best_init
    selected = cset.subset(best_members).with_scores(scores[best_members])
    return CoarseFilterResult(
        selected=selected,
        indices=np.asarray(best_members, dtype=np.intp),
        scores=scores,
        low_confidence=low_confidence,
        iterations=k - 1,
        est_inliers=n_est,
    )

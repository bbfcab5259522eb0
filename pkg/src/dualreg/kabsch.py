"""Closed-form SVD alignment of paired 3D point sets.

Two variants with deliberately different contracts:

  * solve_orthogonal: the unconstrained orthogonal Procrustes solution
    M = V @ U.T with NO determinant correction. det(M) = -1 exposes a
    reflection relating the two sides, which the coarse filter uses to
    reject mirror-symmetric consensus sets.
  * solve_rigid: the proper-rigid least-squares fit (optionally weighted),
    det forced to +1 by negating the last singular direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError
from .transforms import RigidTransform

# Relative floor under which a singular value counts as rank-deficient.
_RANK_TOL = 1e-9


@dataclass(frozen=True)
class WeightedPairSet:
    """Paired source/target points with non-negative weights."""

    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        src = np.asarray(self.sources, dtype=np.float64).reshape(-1, 3)
        tgt = np.asarray(self.targets, dtype=np.float64).reshape(-1, 3)
        if len(src) != len(tgt) or len(src) == 0:
            raise ValueError("sources and targets must be equal-length and non-empty")
        w = (np.ones(len(src)) if self.weights is None
             else np.asarray(self.weights, dtype=np.float64).reshape(-1))
        if len(w) != len(src):
            raise ValueError("weights length mismatch")
        if w.min() < 0.0:
            raise ValueError("weights must be non-negative")
        if not w.sum() > 0.0:
            raise ValueError("weights must not all be zero")
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "targets", tgt)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.sources)


def cross_covariance(sources, targets, weights=None):
    """(Weighted) centered cross-covariance H = sum w (v - v̄)(u - ū)^T."""
    src = np.asarray(sources, dtype=np.float64)
    tgt = np.asarray(targets, dtype=np.float64)
    if weights is None:
        cs = src.mean(axis=0)
        ct = tgt.mean(axis=0)
        return (src - cs).T @ (tgt - ct), cs, ct
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    cs = (w[:, None] * src).sum(axis=0) / total
    ct = (w[:, None] * tgt).sum(axis=0) / total
    return ((w[:, None] * (src - cs)).T @ (tgt - ct)), cs, ct


def solve_orthogonal(sources, targets) -> np.ndarray | None:
    """Best orthogonal matrix mapping centered sources onto centered targets.

    Returns None when the pairing is indeterminate: fewer than 3 pairs, or a
    cross-covariance of rank below 2, where the det sign carries no
    reflection information.
    """
    src = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
    if len(src) != len(tgt):
        raise ValueError("sources and targets must pair up")
    if len(src) < 3:
        return None
    h, _, _ = cross_covariance(src, tgt)
    u, s, vt = np.linalg.svd(h)
    if s[1] <= _RANK_TOL * max(s[0], 1e-300):
        return None
    return vt.T @ u.T


def _collinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return bool(s[1] <= _RANK_TOL * max(s[0], 1e-300))


def solve_rigid(sources, targets, weights=None) -> RigidTransform:
    """Weighted least-squares proper-rigid fit of sources onto targets.

    Minimizes sum_i w_i ||R s_i + t - t_i||^2 over rotations with det +1.
    Raises DegenerateSampleError when either side's points are all collinear
    (the rotation would be unconstrained about the line).
    """
    src = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
    if len(src) != len(tgt) or len(src) < 3:
        raise DegenerateSampleError(f"need >= 3 pairs, got {len(src)}")
    if weights is not None and not float(np.sum(weights)) > 0.0:
        raise DegenerateSampleError("degenerate sample: zero total weight")
    if _collinear(src) or _collinear(tgt):
        raise DegenerateSampleError("degenerate sample: collinear points")
    h, cs, ct = cross_covariance(src, tgt, weights)
    u, s, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    r = (vt.T * np.array([1.0, 1.0, d])) @ u.T
    return RigidTransform(r, ct - r @ cs)


def solve_rigid_pairs(pairs: WeightedPairSet) -> RigidTransform:
    return solve_rigid(pairs.sources, pairs.targets, pairs.weights)


def alignment_objective(transform: RigidTransform, sources, targets, weights=None) -> float:
    """The value sum_i w_i ||R s_i + t - t_i||^2 that solve_rigid minimizes."""
    src = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
    res = transform.apply(src) - tgt
    sq = (res * res).sum(axis=1)
    if weights is not None:
        sq = sq * np.asarray(weights, dtype=np.float64)
    return float(sq.sum())

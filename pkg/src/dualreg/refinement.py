"""Three-point RANSAC refinement with probability-weighted sampling.

Each correspondence carries an inlier probability (0.5 prior). Triples are
drawn proportionally to those probabilities, a closed-form rigid fit gives
the hypothesis, and the probabilities are updated from the inlier/outlier
classification by a fixed-odds rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cloud import OrientedPointCloud
from .coarse_filter import CorrespondenceView, termination_bound
from .config import ResolvedParams
from .correspondences import CorrespondenceSet
from .errors import DegenerateSampleError, InsufficientCorrespondencesError
from .kabsch import solve_rigid
from .transforms import RigidTransform

# Fixed-odds update: inlier observations double the odds, outliers halve them.
ODDS_INLIER = 2.0
ODDS_OUTLIER = 0.5
PROB_MIN = 0.01
PROB_MAX = 0.99

HARD_CAP = 100_000


@dataclass
class RefineState:
    """Mutable loop state of the refinement."""

    probs: np.ndarray
    best_transform: RigidTransform | None = None
    best_inliers: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))
    max_iters: float = math.inf


def sample_triple(probs: np.ndarray, rng: np.random.Generator) -> tuple[int, int, int]:
    """Three distinct indices, drawn sequentially without replacement,
    each draw proportional to the probabilities of the remaining candidates."""
    n = len(probs)
    if n < 3:
        raise InsufficientCorrespondencesError(
            f"refinement needs at least 3 correspondences, got {n}")
    available = np.arange(n)
    picks = []
    for _ in range(3):
        cdf = np.cumsum(probs[available])
        r = rng.random() * cdf[-1]
        k = min(int(np.searchsorted(cdf, r, side="right")), len(available) - 1)
        picks.append(int(available[k]))
        available = np.delete(available, k)
    return picks[0], picks[1], picks[2]


def evaluate_hypothesis(transform: RigidTransform, view: CorrespondenceView,
                        gamma: float) -> np.ndarray:
    """Ascending indices of correspondences with residual strictly below gamma."""
    mask = kernels.transform_inlier_mask(
        view.v, view.u, transform.rotation, transform.translation, gamma)
    return np.nonzero(mask)[0]


def update_probabilities(probs: np.ndarray, inlier_indices: np.ndarray) -> np.ndarray:
    """Bayesian-odds update from one hypothesis classification, then clamp."""
    odds = probs / (1.0 - probs)
    mult = np.full(len(probs), ODDS_OUTLIER)
    mult[inlier_indices] = ODDS_INLIER
    odds = odds * mult
    return np.clip(odds / (1.0 + odds), PROB_MIN, PROB_MAX)


@dataclass
class RefinementResult:
    transform: RigidTransform
    inlier_indices: np.ndarray  # into the refined set, ascending
    probs: np.ndarray           # final per-correspondence inlier probabilities
    iterations: int


def run_refinement(cset: CorrespondenceSet, source: OrientedPointCloud,
                   target: OrientedPointCloud, params: ResolvedParams,
                   rng: np.random.Generator) -> RefinementResult:
    """Probability-weighted three-point RANSAC over the coarse-filtered set.

    Degenerate (collinear) triples consume an iteration without updating
    probabilities. The iteration budget follows the cubic adaptive bound on
    the best inlier count, capped at HARD_CAP.
    """
    n = len(cset)
    if n < 3:
        raise InsufficientCorrespondencesError(
            f"refinement needs at least 3 correspondences, got {n}")
    view = CorrespondenceView.from_set(cset, source, target)
    state = RefineState(probs=np.full(n, 0.5))

    k = 0
    while k < HARD_CAP:
        k += 1
        i, j, l = sample_triple(state.probs, rng)
        transform = None
        try:
            idx = [i, j, l]
            transform = solve_rigid(view.v[idx], view.u[idx])
        except DegenerateSampleError:
            pass
        if transform is not None:
            inliers = evaluate_hypothesis(transform, view, params.gamma)
            if len(inliers) > len(state.best_inliers):
                state.best_inliers = inliers
                state.best_transform = transform
                state.max_iters = termination_bound(
                    len(inliers), n, params.lambda_conf, sample_size=3)
            state.probs = update_probabilities(state.probs, inliers)
        if k >= state.max_iters:
            break

    if state.best_transform is None:
        raise DegenerateSampleError(
            f"no valid hypothesis in {k} iterations (all samples degenerate)")
    return RefinementResult(
        transform=state.best_transform,
        inlier_indices=state.best_inliers,
        probs=state.probs,
        iterations=k,
    )

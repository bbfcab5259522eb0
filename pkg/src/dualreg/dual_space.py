"""Joint refinement over anchor correspondences and geometric proxies.

The refined correspondences act as anchors. Cloud points within a radius
of any anchor form proxy sets with much higher overlap than the raw
clouds; closest-point pairs on the proxies are combined with the anchor
pairs in one robustly weighted least-squares objective, minimized by
alternating assignment, reweighting, and a closed-form rigid solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cloud import OrientedPointCloud
from .config import ResolvedParams
from .errors import DegenerateSampleError, NoProxySupportError
from .kabsch import solve_rigid
from .spatial import SpatialIndex
from .transforms import RigidTransform

SIGMA_FLOOR_ABS = 1e-6


@dataclass(frozen=True)
class ProxyPatch:
    """Per-anchor slice of the proxy sets, used by patch-wise assignment."""

    source_rows: np.ndarray  # rows of ProxySets.source_points in this patch
    target_rows: np.ndarray  # rows of ProxySets.target_points searchable here
    index: SpatialIndex


@dataclass(frozen=True)
class ProxySets:
    """Aggregated neighborhoods around the anchor correspondences.

    In "whole" mode both sides are deduplicated unions and assignment
    searches the full target side; in "patch" mode the source side keeps
    one entry per (anchor, point) pair and each patch searches only its
    own anchor's target neighborhood.
    """

    source_points: np.ndarray
    target_points: np.ndarray
    source_indices: np.ndarray  # per source row: index into the searched source cloud
    target_indices: np.ndarray
    target_index: SpatialIndex
    patches: tuple[ProxyPatch, ...] | None = None

    def __post_init__(self):
        if len(self.source_points) == 0 or len(self.target_points) == 0:
            raise NoProxySupportError("no proxy support: empty proxy side")


def build_proxies(anchor_sources: np.ndarray, anchor_targets: np.ndarray,
                  source_cloud: OrientedPointCloud, target_cloud: OrientedPointCloud,
                  params: ResolvedParams) -> ProxySets:
    """Union of radius-beta neighborhoods around the anchors, per side.

    Strict radius, deterministic ascending-index order, deduplicated in
    "whole" mode.
    """
    beta = params.beta
    src_index = SpatialIndex(source_cloud.points)
    tgt_index = SpatialIndex(target_cloud.points)
    per_anchor_src = [src_index.radius_search(a, beta) for a in np.atleast_2d(anchor_sources)]
    per_anchor_tgt = [tgt_index.radius_search(a, beta) for a in np.atleast_2d(anchor_targets)]

    tgt_union = _sorted_union(per_anchor_tgt)
    if params.proxy_mode == "whole":
        src_union = _sorted_union(per_anchor_src)
        if len(src_union) == 0 or len(tgt_union) == 0:
            raise NoProxySupportError("no proxy support within beta of any anchor")
        target_points = target_cloud.points[tgt_union]
        return ProxySets(
            source_points=source_cloud.points[src_union],
            target_points=target_points,
            source_indices=src_union,
            target_indices=tgt_union,
            target_index=SpatialIndex(target_points),
        )

    # Patch mode: keep per-anchor groups; source rows repeat across patches.
    src_concat = []
    patches = []
    union_pos = {int(g): row for row, g in enumerate(tgt_union)}
    offset = 0
    for src_ids, tgt_ids in zip(per_anchor_src, per_anchor_tgt):
        if len(src_ids) == 0 or len(tgt_ids) == 0:
            continue
        rows = np.arange(offset, offset + len(src_ids), dtype=np.intp)
        offset += len(src_ids)
        src_concat.append(src_ids)
        target_rows = np.array([union_pos[int(g)] for g in tgt_ids], dtype=np.intp)
        patches.append(ProxyPatch(
            source_rows=rows,
            target_rows=target_rows,
            index=SpatialIndex(target_cloud.points[tgt_ids]),
        ))
    if not src_concat or len(tgt_union) == 0:
        raise NoProxySupportError("no proxy support within beta of any anchor")
    src_all = np.concatenate(src_concat)
    return ProxySets(
        source_points=source_cloud.points[src_all],
        target_points=target_cloud.points[tgt_union],
        source_indices=src_all,
        target_indices=tgt_union,
        target_index=SpatialIndex(target_cloud.points[tgt_union]),
        patches=tuple(patches),
    )


def _sorted_union(index_lists) -> np.ndarray:
    nonempty = [ids for ids in index_lists if len(ids)]
    if not nonempty:
        return np.empty(0, dtype=np.intp)
    return np.unique(np.concatenate(nonempty))


def compute_sigma(anchor_sources: np.ndarray, anchor_targets: np.ndarray,
                  probs: np.ndarray, transform: RigidTransform,
                  subset_fraction: float, gamma: float) -> float:
    """Residual scale from the high-confidence anchor subset.

    Takes the top ceil(subset_fraction * n) anchors by inlier probability
    (ties -> lower index), sigma = max residual over them / 3, floored at
    max(SIGMA_FLOOR_ABS, 0.01 * gamma) so the Gaussian weight stays defined
    when the anchors fit perfectly.
    """
    n = len(anchor_sources)
    k = max(1, int(np.ceil(subset_fraction * n - 1e-12)))
    order = np.argsort(-np.asarray(probs), kind="stable")[:k]
    res = transform.apply(anchor_sources[order]) - anchor_targets[order]
    sigma = float(np.sqrt((res * res).sum(axis=1)).max()) / 3.0
    return max(sigma, SIGMA_FLOOR_ABS, 0.01 * gamma)


def robust_weight(residual, sigma: float):
    """Gaussian weight exp(-r^2 / (2 sigma^2)); 1 at zero residual."""
    r = np.asarray(residual, dtype=np.float64)
    w = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return float(w) if w.ndim == 0 else w


def assign_closest(transform: RigidTransform, proxies: ProxySets) -> np.ndarray:
    """Closest target-proxy row for each transformed source-proxy point."""
    moved = transform.apply(proxies.source_points)
    if proxies.patches is None:
        rho, _ = proxies.target_index.nearest_batch(moved)
        return rho
    rho = np.empty(len(moved), dtype=np.intp)
    for patch in proxies.patches:
        local, _ = patch.index.nearest_batch(moved[patch.source_rows])
        rho[patch.source_rows] = patch.target_rows[local]
    return rho


def objective(transform: RigidTransform, anchor_sources, anchor_targets,
              anchor_weights, proxies: ProxySets, rho: np.ndarray,
              proxy_weights, lambda_bal: float) -> float:
    """The dual-space energy at the given assignment and frozen weights."""
    ra = transform.apply(anchor_sources) - anchor_targets
    anchor_term = float((anchor_weights * (ra * ra).sum(axis=1)).sum())
    rp = transform.apply(proxies.source_points) - proxies.target_points[rho]
    proxy_term = float((proxy_weights * (rp * rp).sum(axis=1)).sum())
    return (lambda_bal / len(anchor_sources)) * anchor_term \
        + proxy_term / len(proxies.source_points)


@dataclass(frozen=True)
class SolverStep:
    objective_before: float  # frozen-weight energy at the incoming transform
    objective_after: float   # same frozen data, at the newly solved transform
    delta: float             # ||[R|t]_new - [R|t]_old||_F
    active_pairs: int        # proxy pairs with residual < 3 sigma


@dataclass
class SolverTrace:
    sigma: float
    steps: list[SolverStep] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def final_delta(self) -> float:
        return self.steps[-1].delta if self.steps else 0.0


def solve_dual_space(anchor_sources, anchor_targets, probs,
                     init_transform: RigidTransform, proxies: ProxySets,
                     params: ResolvedParams) -> tuple[RigidTransform, SolverTrace]:
    """Alternating minimization of the dual-space objective.

    Per iteration: (a) closest-point assignment on the proxies, (b) Gaussian
    reweighting of both terms at the current transform, (c) one weighted
    closed-form rigid solve over the union of anchor and proxy pairs, which
    minimizes the frozen objective exactly. sigma is computed once from the
    initial transform and held fixed. Stops when the [R|t] matrix moves less
    than eps_term in Frobenius norm, or after max_dual_iters iterations; a
    degenerate solve returns the previous iterate flagged as stalled.
    """
    av = np.asarray(anchor_sources, dtype=np.float64).reshape(-1, 3)
    au = np.asarray(anchor_targets, dtype=np.float64).reshape(-1, 3)
    sigma = compute_sigma(av, au, probs, init_transform,
                          params.subset_fraction, params.gamma)
    trace = SolverTrace(sigma=sigma)
    n_anchor = len(av)
    n_proxy = len(proxies.source_points)
    union_src = np.vstack([av, proxies.source_points])

    current = init_transform
    for _ in range(params.max_dual_iters):
        rho = assign_closest(current, proxies)
        res_a = np.linalg.norm(current.apply(av) - au, axis=1)
        res_p = np.linalg.norm(current.apply(proxies.source_points)
                               - proxies.target_points[rho], axis=1)
        w_a = robust_weight(res_a, sigma)
        w_p = robust_weight(res_p, sigma)
        e_before = objective(current, av, au, w_a, proxies, rho, w_p,
                             params.lambda_bal)
        union_tgt = np.vstack([au, proxies.target_points[rho]])
        union_w = np.concatenate([
            (params.lambda_bal / n_anchor) * w_a,
            w_p / n_proxy,
        ])
        try:
            solved = solve_rigid(union_src, union_tgt, union_w)
        except DegenerateSampleError:
            trace.stalled = True
            break
        e_after = objective(solved, av, au, w_a, proxies, rho, w_p,
                            params.lambda_bal)
        if e_after > e_before:
            # Rounding guard: only reachable at a fixed point, where the
            # closed-form solve reproduces the incoming transform up to
            # floating-point noise. Keeping the incoming iterate preserves
            # exact surrogate descent.
            solved = current
            e_after = e_before
        delta = float(np.linalg.norm(solved.matrix() - current.matrix()))
        trace.steps.append(SolverStep(
            objective_before=e_before,
            objective_after=e_after,
            delta=delta,
            active_pairs=int((res_p < 3.0 * sigma).sum()),
        ))
        current = solved
        if delta < params.eps_term:
            trace.converged = True
            break
    return current, trace

"""Synthetic registration scenes with exact ground truth.

Scenes are unions of random planar rectangles and spherical caps, so every
point carries an analytic normal. The generator controls the overlap
fraction, the noise level, the transform magnitude, and the exact number of
ground-truth inlier correspondences, which makes stage-wise inlier-ratio
claims testable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import OrientedPointCloud
from .correspondences import CorrespondenceSet
from .transforms import RigidTransform, random_rotation, rotation_about_axis

# Designated inliers are kept strictly inside gamma and mismatches strictly
# outside, so ground-truth labeling is unambiguous at the threshold.
_INLIER_MARGIN = 0.98
_OUTLIER_MARGIN = 1.05


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic scene."""

    n_points: int = 4000
    overlap_fraction: float = 0.7
    noise_sigma: float = 0.1 / 6.0
    transform_magnitude: float = 0.5   # fraction of the rotation/translation maxima
    inlier_ratio: float = 0.2
    n_correspondences: int = 1000
    seed: int = 0
    gamma: float = 0.1                 # inlier threshold the labels are built against
    rotation_max_deg: float = 180.0
    translation_max: float = 2.0
    extent: float = 3.0                # scene diameter scale
    n_patches: int = 8

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError("n_points must be >= 8")
        if not 0.0 < self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction must be in (0, 1]")
        if not 0.0 <= self.inlier_ratio <= 1.0:
            raise ValueError("inlier_ratio must be in [0, 1]")
        if self.n_correspondences < 1:
            raise ValueError("n_correspondences must be >= 1")
        if self.noise_sigma < 0 or self.gamma <= 0:
            raise ValueError("noise_sigma must be >= 0 and gamma > 0")
        if not 0.0 <= self.transform_magnitude <= 1.0:
            raise ValueError("transform_magnitude must be in [0, 1]")


@dataclass(frozen=True)
class SyntheticScene:
    source: OrientedPointCloud
    target: OrientedPointCloud
    correspondences: CorrespondenceSet
    ground_truth: RigidTransform   # maps source points onto target points
    n_true_inliers: int


def _unit(v):
    return v / np.linalg.norm(v)


def _sample_patch(rng: np.random.Generator, n: int, extent: float):
    """One planar rectangle or spherical cap with analytic normals."""
    center = rng.uniform(-extent / 2.0, extent / 2.0, 3)
    if rng.random() < 0.5:
        frame = random_rotation(rng)
        e1, e2, normal = frame[:, 0], frame[:, 1], frame[:, 2]
        half = rng.uniform(0.1, 0.27, 2) * extent
        st = rng.uniform(-1.0, 1.0, (n, 2)) * half
        pts = center + st[:, :1] * e1 + st[:, 1:] * e2
        nrm = np.tile(normal, (n, 1))
        return pts, nrm
    radius = rng.uniform(0.1, 0.3) * extent
    cap_dir = _unit(rng.normal(size=3))
    cap_half_angle = rng.uniform(0.4, 1.1)
    cos_z = rng.uniform(np.cos(cap_half_angle), 1.0, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    sin_z = np.sqrt(np.maximum(0.0, 1.0 - cos_z * cos_z))
    local = np.column_stack([sin_z * np.cos(phi), sin_z * np.sin(phi), cos_z])
    align = _rotation_to(np.array([0.0, 0.0, 1.0]), cap_dir)
    omega = local @ align.T
    return center + radius * omega, omega


def _rotation_to(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation taking unit vector a to unit vector b."""
    c = float(a @ b)
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        axis = np.cross(a, np.array([1.0, 0.0, 0.0]))
        if np.linalg.norm(axis) < 1e-9:
            axis = np.cross(a, np.array([0.0, 1.0, 0.0]))
        return rotation_about_axis(axis, np.pi)
    axis = np.cross(a, b)
    return rotation_about_axis(axis, float(np.arccos(np.clip(c, -1.0, 1.0))))


def _scene_surface(rng: np.random.Generator, n: int, spec: SynthSpec):
    counts = rng.multinomial(n, np.full(spec.n_patches, 1.0 / spec.n_patches))
    pts, nrm = [], []
    for c in counts:
        if c == 0:
            continue
        p, m = _sample_patch(rng, int(c), spec.extent)
        pts.append(p)
        nrm.append(m)
    return np.vstack(pts), np.vstack(nrm)


def _ground_truth(rng: np.random.Generator, spec: SynthSpec) -> RigidTransform:
    angle = np.radians(spec.transform_magnitude * spec.rotation_max_deg)
    axis = _unit(rng.normal(size=3))
    rotation = rotation_about_axis(axis, angle)
    direction = _unit(rng.normal(size=3))
    return RigidTransform(rotation, spec.transform_magnitude * spec.translation_max * direction)


def synth_scene(spec: SynthSpec) -> SyntheticScene:
    """Build one synthetic registration job; deterministic in spec.seed.

    The target cloud is the clean scene; the source cloud is the overlap
    region plus source-only patches, mapped through the inverse ground
    truth with Gaussian noise added. Exactly floor(inlier_ratio *
    n_correspondences) correspondences are true pairs (residual strictly
    inside gamma under the ground truth); the rest are mismatches with
    residual strictly outside.
    """
    rng = np.random.default_rng(spec.seed)
    n_common = int(np.floor(spec.overlap_fraction * spec.n_points))
    n_only = spec.n_points - n_common
    n_inliers = int(np.floor(spec.inlier_ratio * spec.n_correspondences))
    if n_common < 1:
        raise ValueError("overlap_fraction leaves no common points")
    if n_inliers > n_common:
        raise ValueError(
            f"infeasible spec: {n_inliers} inliers requested but only "
            f"{n_common} overlap points available")

    scene_pts, scene_nrm = _scene_surface(rng, n_common + 2 * n_only, spec)
    common_pts, common_nrm = scene_pts[:n_common], scene_nrm[:n_common]
    tgt_only_pts, tgt_only_nrm = scene_pts[n_common:n_common + n_only], scene_nrm[n_common:n_common + n_only]
    src_only_pts, src_only_nrm = scene_pts[n_common + n_only:], scene_nrm[n_common + n_only:]

    gt = _ground_truth(rng, spec)
    inv = gt.invert()

    target_pts = np.vstack([common_pts, tgt_only_pts])
    target_nrm = np.vstack([common_nrm, tgt_only_nrm])

    src_clean = inv.apply(np.vstack([common_pts, src_only_pts]))
    src_nrm = np.vstack([common_nrm, src_only_nrm]) @ gt.rotation
    noise = rng.normal(scale=spec.noise_sigma, size=src_clean.shape) if spec.noise_sigma > 0 \
        else np.zeros_like(src_clean)

    # Correspondences: common point i sits at index i in both clouds.
    inlier_ids = rng.choice(n_common, size=n_inliers, replace=False) if n_inliers else \
        np.empty(0, dtype=np.intp)
    limit = _INLIER_MARGIN * spec.gamma
    for i in inlier_ids:
        attempts = 0
        while np.linalg.norm(noise[i]) >= limit:
            noise[i] = rng.normal(scale=spec.noise_sigma, size=3)
            attempts += 1
            if attempts > 100_000:
                raise ValueError("infeasible spec: noise_sigma too large for gamma")
    source_pts = src_clean + noise

    source = OrientedPointCloud(source_pts, src_nrm)
    target = OrientedPointCloud(target_pts, target_nrm)

    n_out = spec.n_correspondences - n_inliers
    out_src = np.empty(n_out, dtype=np.intp)
    out_tgt = np.empty(n_out, dtype=np.intp)
    floor = _OUTLIER_MARGIN * spec.gamma
    moved = gt.apply(source_pts)
    for row in range(n_out):
        attempts = 0
        while True:
            si = int(rng.integers(len(source)))
            ti = int(rng.integers(len(target)))
            if np.linalg.norm(moved[si] - target_pts[ti]) >= floor:
                out_src[row] = si
                out_tgt[row] = ti
                break
            attempts += 1
            if attempts > 100_000:
                raise ValueError("infeasible spec: gamma too large to place mismatches")

    src_ids = np.concatenate([inlier_ids.astype(np.intp), out_src])
    tgt_ids = np.concatenate([inlier_ids.astype(np.intp), out_tgt])
    order = rng.permutation(spec.n_correspondences)
    cset = CorrespondenceSet(src_ids[order], tgt_ids[order])
    return SyntheticScene(
        source=source,
        target=target,
        correspondences=cset,
        ground_truth=gt,
        n_true_inliers=n_inliers,
    )


def gt_inlier_ratio(cset: CorrespondenceSet, source: OrientedPointCloud,
                    target: OrientedPointCloud, gt: RigidTransform,
                    gamma: float) -> float:
    """Fraction of correspondences with residual strictly below gamma under gt."""
    if len(cset) == 0:
        return 0.0
    res = gt.apply(source.points[cset.source_indices]) - target.points[cset.target_indices]
    return float((np.sqrt((res * res).sum(axis=1)) < gamma).mean())

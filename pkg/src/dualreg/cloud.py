"""Oriented point clouds and their preprocessing.

Positions are (N, 3) float64 arrays; normals are unit-length (N, 3) arrays
of the same length. All operations are pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateCloudError

NORMAL_UNIT_TOL = 1e-6


def _as_points(x) -> np.ndarray:
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError(f"expected (N, 3) array, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class OrientedPointCloud:
    """Points plus unit normals, one normal per point."""

    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        nrm = _as_points(self.normals)
        if len(pts) != len(nrm):
            raise ValueError(f"{len(pts)} points but {len(nrm)} normals")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite point coordinates")
        norms = np.sqrt((nrm * nrm).sum(axis=1))
        if len(nrm) and np.max(np.abs(norms - 1.0), initial=0.0) >= NORMAL_UNIT_TOL:
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"normal {worst} has norm {norms[worst]:.8f}, expected 1")
        pts.flags.writeable = False
        nrm.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return len(self.points)

    def transformed(self, transform) -> "OrientedPointCloud":
        """Apply a rigid transform to points and normals."""
        return OrientedPointCloud(
            transform.apply(self.points),
            self.normals @ transform.rotation.T,
        )


def cloud_resolution(cloud: OrientedPointCloud | np.ndarray) -> float:
    """Median nearest-neighbor distance over all points.

    Robust to density outliers; used as the base unit for the scale-dependent
    pipeline parameters.
    """
    pts = cloud.points if isinstance(cloud, OrientedPointCloud) else _as_points(cloud)
    if len(pts) < 2:
        raise DegenerateCloudError("resolution needs at least 2 points")
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=2)
    return float(np.median(dist[:, 1]))


def voxel_downsample(cloud: OrientedPointCloud, voxel_size: float) -> OrientedPointCloud:
    """One point per occupied voxel: centroid position, renormalized mean normal.

    The grid is anchored at the coordinate origin and the output is ordered by
    ascending lexicographic voxel index, so results are reproducible bit for
    bit. A zero mean normal falls back to the normal of the point nearest the
    centroid.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    n = len(cloud)
    if n == 0:
        return cloud
    keys = np.floor(cloud.points / voxel_size).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    m = len(uniq)
    counts = np.bincount(inverse, minlength=m).astype(np.float64)

    centroids = np.zeros((m, 3))
    mean_nrm = np.zeros((m, 3))
    for axis in range(3):
        centroids[:, axis] = np.bincount(inverse, weights=cloud.points[:, axis], minlength=m)
        mean_nrm[:, axis] = np.bincount(inverse, weights=cloud.normals[:, axis], minlength=m)
    centroids /= counts[:, None]

    lengths = np.sqrt((mean_nrm * mean_nrm).sum(axis=1))
    degenerate = lengths < 1e-12
    ok = ~degenerate
    mean_nrm[ok] /= lengths[ok, None]
    for cell in np.nonzero(degenerate)[0]:
        members = np.nonzero(inverse == cell)[0]
        local = cloud.points[members] - centroids[cell]
        nearest = members[int(np.argmin((local * local).sum(axis=1)))]
        mean_nrm[cell] = cloud.normals[nearest]
    return OrientedPointCloud(centroids, mean_nrm)


def _orthogonal_unit(direction: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to `direction`."""
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(direction)))] = 1.0
    v = np.cross(direction, axis)
    return v / np.linalg.norm(v)


def _pca_normal(local: np.ndarray, viewpoint: np.ndarray) -> np.ndarray:
    """Normal of one neighborhood: smallest-eigenvalue direction, sign
    disambiguated toward the viewpoint."""
    centroid = local.mean(axis=0)
    centered = local - centroid
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    scale = max(evals[2], 1e-300)
    if evals[1] / scale < 1e-12:
        # Neighbors lie on a line (or a point): any orthogonal unit works.
        normal = _orthogonal_unit(evecs[:, 2])
    else:
        normal = evecs[:, 0]
    if float(normal @ (viewpoint - centroid)) < 0.0:
        normal = -normal
    return normal


def estimate_normals(points, k: int = 20, viewpoint=(0.0, 0.0, 0.0)) -> OrientedPointCloud:
    """Per-point normals from PCA over the k nearest neighbors (self included).

    The normal is the eigenvector of the smallest covariance eigenvalue,
    with its sign chosen to have a non-negative dot product with the vector
    from the local centroid to `viewpoint`. Collinear neighborhoods get a
    deterministic vector orthogonal to the line.
    """
    pts = _as_points(points)
    n = len(pts)
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    if n < k:
        raise DegenerateCloudError(f"normal estimation with k={k} needs >= {k} points, got {n}")
    vp = np.asarray(viewpoint, dtype=np.float64).reshape(3)

    tree = cKDTree(pts)
    _, nbr = tree.query(pts, k=k)
    normals = np.empty((n, 3))
    for i in range(n):
        normals[i] = _pca_normal(pts[nbr[i]], vp)
    return OrientedPointCloud(pts, normals)

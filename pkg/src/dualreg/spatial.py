"""Exact nearest-neighbor and fixed-radius search with deterministic ties.

Backed by scipy's kd-tree, but with two contract tightenings the raw tree
does not guarantee:

  * nearest() breaks exact distance ties by the smallest index, matching an
    exhaustive linear scan;
  * radius_search() is strict (< r): a point at distance exactly r is
    excluded.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateCloudError

# Relative gap below which the top-2 kd-tree answers are re-checked exactly.
_TIE_MARGIN = 1e-9


def _sqdist(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    d = points - q
    return (d * d).sum(axis=1)


class SpatialIndex:
    """Immutable search structure over a fixed (N, 3) point array."""

    def __init__(self, points):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (N, 3) array, got {pts.shape}")
        if len(pts) == 0:
            raise DegenerateCloudError("cannot index an empty point set")
        self._points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def _exact_nearest(self, q: np.ndarray, radius: float) -> tuple[int, float]:
        cand = self._tree.query_ball_point(q, radius)
        sq = _sqdist(self._points[cand], q)
        best = sq.min()
        winner = min(int(cand[j]) for j in np.nonzero(sq == best)[0])
        return winner, float(np.sqrt(best))

    def nearest(self, q) -> tuple[int, float]:
        """Index and distance of the exact nearest point; ties -> smallest index."""
        q = np.asarray(q, dtype=np.float64).reshape(3)
        if len(self._points) == 1:
            return 0, float(np.sqrt(_sqdist(self._points, q)[0]))
        d, i = self._tree.query(q, k=2)
        gap = d[1] - d[0]
        if gap > _TIE_MARGIN * max(d[0], 1.0):
            return int(i[0]), float(d[0])
        return self._exact_nearest(q, d[0] * (1.0 + _TIE_MARGIN) + 1e-12)

    def nearest_batch(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized nearest() over (M, 3) queries -> (indices, distances)."""
        qs = np.ascontiguousarray(queries, dtype=np.float64)
        if len(self._points) == 1:
            idx = np.zeros(len(qs), dtype=np.intp)
            return idx, np.sqrt(((qs - self._points[0]) ** 2).sum(axis=1))
        d, i = self._tree.query(qs, k=2)
        idx = i[:, 0].astype(np.intp)
        dist = d[:, 0].copy()
        close = d[:, 1] - d[:, 0] <= _TIE_MARGIN * np.maximum(d[:, 0], 1.0)
        for row in np.nonzero(close)[0]:
            idx[row], dist[row] = self._exact_nearest(
                qs[row], d[row, 0] * (1.0 + _TIE_MARGIN) + 1e-12)
        return idx, dist

    def radius_search(self, q, r: float) -> np.ndarray:
        """Ascending indices of all points with distance strictly below r."""
        if not r > 0:
            raise ValueError(f"radius must be positive, got {r}")
        q = np.asarray(q, dtype=np.float64).reshape(3)
        cand = np.asarray(sorted(self._tree.query_ball_point(q, r)), dtype=np.intp)
        if len(cand) == 0:
            return cand
        keep = _sqdist(self._points[cand], q) < r * r
        return cand[keep]

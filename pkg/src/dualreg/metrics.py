"""Registration error metrics and success accounting."""

from __future__ import annotations

import numpy as np

from .cloud import OrientedPointCloud
from .config import Preset
from .transforms import RigidTransform


def rotation_error(est: RigidTransform, gt: RigidTransform) -> float:
    """Geodesic rotation error in degrees."""
    cos = (float(np.trace(gt.rotation.T @ est.rotation)) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))


def translation_error(est: RigidTransform, gt: RigidTransform) -> float:
    """Euclidean distance between the translation vectors."""
    return float(np.linalg.norm(est.translation - gt.translation))


def rmse(est: RigidTransform, gt: RigidTransform,
         source: OrientedPointCloud | np.ndarray) -> float:
    """Root mean square discrepancy of the two transforms over the source points.

    Note this is a transform-discrepancy RMSE: it needs no ground-truth
    correspondences, so its absolute values are not comparable to RMSE
    numbers defined over matched pairs.
    """
    pts = source.points if isinstance(source, OrientedPointCloud) else np.asarray(source)
    if len(pts) == 0:
        raise ValueError("rmse needs a non-empty source cloud")
    d = est.apply(pts) - gt.apply(pts)
    return float(np.sqrt((d * d).sum(axis=1).mean()))


def is_success(re_deg: float, te: float, preset: Preset) -> bool:
    """Strict-inequality success test against the preset thresholds."""
    return re_deg < preset.re_max_deg and te < preset.te_max


def registration_recall(reports, preset: Preset) -> float:
    """Percentage of reports whose errors beat the preset thresholds strictly."""
    reports = list(reports)
    if not reports:
        raise ValueError("recall over an empty report list")
    wins = 0
    for r in reports:
        if r.re_deg is None or r.te is None:
            raise ValueError("registration_recall requires ground-truth metrics")
        wins += is_success(r.re_deg, r.te, preset)
    return 100.0 * wins / len(reports)

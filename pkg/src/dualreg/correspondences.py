"""Putative source-target point pairs with confidence bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cloud import OrientedPointCloud


class Correspondence(NamedTuple):
    """One putative pair: indices into the source and target clouds."""

    source_index: int
    target_index: int
    score: int = 0
    inlier_prob: float = 0.5


@dataclass(frozen=True)
class CorrespondenceSet:
    """Column-wise store of correspondences.

    `scores` are the non-negative consensus counts accumulated by the coarse
    filter; `inlier_probs` are the per-pair inlier probabilities maintained
    by the refinement stage (0.5 prior).
    """

    source_indices: np.ndarray
    target_indices: np.ndarray
    scores: np.ndarray = field(default=None)  # type: ignore[assignment]
    inlier_probs: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        src = np.asarray(self.source_indices, dtype=np.intp).reshape(-1)
        tgt = np.asarray(self.target_indices, dtype=np.intp).reshape(-1)
        if len(src) != len(tgt):
            raise ValueError("source/target index columns differ in length")
        n = len(src)
        scores = (np.zeros(n, dtype=np.int64) if self.scores is None
                  else np.asarray(self.scores, dtype=np.int64).reshape(-1))
        probs = (np.full(n, 0.5) if self.inlier_probs is None
                 else np.asarray(self.inlier_probs, dtype=np.float64).reshape(-1))
        if len(scores) != n or len(probs) != n:
            raise ValueError("score/probability columns differ in length")
        if n and (scores.min() < 0):
            raise ValueError("scores must be non-negative")
        if n and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError("inlier probabilities must lie in [0, 1]")
        for name, arr in (("source_indices", src), ("target_indices", tgt),
                          ("scores", scores), ("inlier_probs", probs)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.source_indices)

    def __getitem__(self, i: int) -> Correspondence:
        return Correspondence(
            int(self.source_indices[i]),
            int(self.target_indices[i]),
            int(self.scores[i]),
            float(self.inlier_probs[i]),
        )

    def validate_against(self, source: OrientedPointCloud, target: OrientedPointCloud):
        if len(self) == 0:
            return
        if self.source_indices.min() < 0 or self.source_indices.max() >= len(source):
            raise ValueError("source index out of bounds")
        if self.target_indices.min() < 0 or self.target_indices.max() >= len(target):
            raise ValueError("target index out of bounds")

    def subset(self, indices) -> "CorrespondenceSet":
        idx = np.asarray(indices, dtype=np.intp)
        return CorrespondenceSet(
            self.source_indices[idx],
            self.target_indices[idx],
            self.scores[idx],
            self.inlier_probs[idx],
        )

    def with_scores(self, scores) -> "CorrespondenceSet":
        return CorrespondenceSet(self.source_indices, self.target_indices,
                                 scores, self.inlier_probs)

    def with_probs(self, probs) -> "CorrespondenceSet":
        return CorrespondenceSet(self.source_indices, self.target_indices,
                                 self.scores, probs)

    def gather(self, source: OrientedPointCloud, target: OrientedPointCloud):
        """Positions and normals of both endpoints, as four (M, 3) arrays."""
        return (
            source.points[self.source_indices],
            target.points[self.target_indices],
            source.normals[self.source_indices],
            target.normals[self.target_indices],
        )

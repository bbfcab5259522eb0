"""Rigid transforms: a rotation matrix plus a translation vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

Vec3 = NDArray[np.float64]     # shape (3,)
Mat3 = NDArray[np.float64]     # shape (3, 3)
Points = NDArray[np.float64]   # shape (N, 3)

# Orthonormality / unit-determinant slack accepted by the constructor.
ORTHO_TOL = 1e-9


def _as_f64(x) -> NDArray[np.float64]:
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion p -> rotation @ p + translation.

    The constructor enforces that `rotation` is a proper rotation:
    orthonormal within ORTHO_TOL (Frobenius) and det = +1 within ORTHO_TOL.
    Instances are immutable and safe to share.
    """

    rotation: Mat3 = field(default_factory=lambda: np.eye(3))
    translation: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = _as_f64(self.rotation).reshape(3, 3)
        t = _as_f64(self.translation).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("transform has non-finite entries")
        ortho_dev = float(np.linalg.norm(r.T @ r - np.eye(3)))
        if ortho_dev >= ORTHO_TOL:
            raise ValueError(f"rotation not orthonormal (|R'R - I|_F = {ortho_dev:.3e})")
        det = float(np.linalg.det(r))
        if abs(det - 1.0) >= ORTHO_TOL:
            raise ValueError(f"rotation not proper (det = {det:.12f})")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    @staticmethod
    def from_matrix(m) -> "RigidTransform":
        """Build from a 3x4 [R|t] or 4x4 homogeneous matrix."""
        m = _as_f64(m)
        if m.shape not in ((3, 4), (4, 4)):
            raise ValueError(f"expected 3x4 or 4x4 matrix, got {m.shape}")
        return RigidTransform(m[:3, :3], m[:3, 3])

    def apply(self, points) -> Points:
        """Apply to a single point (3,) or a batch (N, 3)."""
        p = _as_f64(points)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return the transform equivalent to applying `other`, then self."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def invert(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -(rt @ self.translation))

    def matrix(self) -> NDArray[np.float64]:
        """The 3x4 [R|t] matrix."""
        return np.hstack([self.rotation, self.translation.reshape(3, 1)])

    def matrix4(self) -> NDArray[np.float64]:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def flat(self) -> NDArray[np.float64]:
        """Row-major rotation entries followed by the translation (12 numbers)."""
        return np.concatenate([self.rotation.reshape(-1), self.translation])


def rotation_about_axis(axis, angle_rad: float) -> Mat3:
    """Rotation matrix about a (not necessarily unit) axis, Rodrigues form."""
    a = _as_f64(axis).reshape(3)
    n = float(np.linalg.norm(a))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    x, y, z = a / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle_rad) * k + (1.0 - np.cos(angle_rad)) * (k @ k)


def random_rotation(rng: np.random.Generator) -> Mat3:
    """Uniformly random proper rotation (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] *= -1
    return q

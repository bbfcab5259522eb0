import numpy as np
import pytest

from dualreg import OrientedPointCloud, RigidTransform, random_rotation


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_transform(rng, max_translation=2.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng),
                          rng.uniform(-max_translation, max_translation, 3))


def random_cloud(rng, n=50, scale=1.0) -> OrientedPointCloud:
    pts = rng.uniform(-scale, scale, (n, 3))
    nrm = rng.normal(size=(n, 3))
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return OrientedPointCloud(pts, nrm)

import numpy as np
import pytest

from dualreg import RigidTransform, rotation_about_axis

from conftest import random_transform

ROT90Z = rotation_about_axis([0, 0, 1], np.pi / 2)


def test_apply_identity():
    assert np.allclose(RigidTransform.identity().apply([1.0, 2.0, 3.0]), [1, 2, 3])


def test_apply_rotation_90z():
    t = RigidTransform(ROT90Z, [0, 0, 0])
    assert np.allclose(t.apply([1.0, 0, 0]), [0, 1, 0], atol=1e-15)


def test_apply_rotation_plus_translation():
    # Hand-checked: R(1,0,0) = (0,1,0); + (1,1,1) = (1,2,1).
    t = RigidTransform(ROT90Z, [1, 1, 1])
    assert np.allclose(t.apply([1.0, 0, 0]), [1, 2, 1], atol=1e-15)


def test_apply_batch_matches_single(rng):
    t = random_transform(rng)
    pts = rng.normal(size=(17, 3))
    batch = t.apply(pts)
    for i in range(len(pts)):
        assert np.allclose(batch[i], t.apply(pts[i]), atol=1e-12)


def test_compose_identity_law(rng):
    t = random_transform(rng)
    composed = RigidTransform.identity().compose(t)
    assert np.allclose(composed.rotation, t.rotation)
    assert np.allclose(composed.translation, t.translation)


def test_compose_with_inverse_is_identity(rng):
    for _ in range(10):
        t = random_transform(rng)
        i = t.compose(t.invert())
        assert np.linalg.norm(i.rotation - np.eye(3)) < 1e-9
        assert np.linalg.norm(i.translation) < 1e-9


def test_compose_two_quarter_turns():
    # Matrix-product oracle: two 90 degree z-rotations equal one 180 degree.
    q = RigidTransform(ROT90Z, [0, 0, 0])
    half = q.compose(q)
    expected = rotation_about_axis([0, 0, 1], np.pi)
    assert np.allclose(half.rotation, expected, atol=1e-15)


def test_compose_matches_sequential_application(rng):
    a = random_transform(rng)
    b = random_transform(rng)
    p = rng.normal(size=3)
    assert np.allclose(a.compose(b).apply(p), a.apply(b.apply(p)), atol=1e-12)


def test_invert_identity():
    i = RigidTransform.identity().invert()
    assert np.allclose(i.rotation, np.eye(3))
    assert np.allclose(i.translation, 0.0)


def test_invert_pure_translation():
    t = RigidTransform(np.eye(3), [1, 2, 3]).invert()
    assert np.allclose(t.translation, [-1, -2, -3])


def test_invert_rotation_negates_angle():
    theta = 0.6
    t = RigidTransform(rotation_about_axis([0, 0, 1], theta), [0, 0, 0]).invert()
    assert np.allclose(t.rotation, rotation_about_axis([0, 0, 1], -theta), atol=1e-15)


def test_apply_preserves_pairwise_distances(rng):
    for _ in range(100):
        t = random_transform(rng)
        p, q = rng.normal(size=3), rng.normal(size=3)
        before = np.linalg.norm(p - q)
        after = np.linalg.norm(t.apply(p) - t.apply(q))
        assert abs(after - before) < 1e-9


def test_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 1.1, [0, 0, 0])


def test_rejects_reflection():
    m = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        RigidTransform(m, [0, 0, 0])


def test_matrix_roundtrip(rng):
    t = random_transform(rng)
    again = RigidTransform.from_matrix(t.matrix())
    assert np.allclose(again.rotation, t.rotation)
    assert np.allclose(again.translation, t.translation)
    assert np.allclose(RigidTransform.from_matrix(t.matrix4()).translation, t.translation)


def test_flat_layout(rng):
    t = random_transform(rng)
    flat = t.flat()
    assert flat.shape == (12,)
    assert np.allclose(flat[:9].reshape(3, 3), t.rotation)
    assert np.allclose(flat[9:], t.translation)

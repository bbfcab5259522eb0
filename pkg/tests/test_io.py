import numpy as np
import pytest

from dualreg import FileFormatError
from dualreg import io as dio
from dualreg import synth_scene, SynthSpec

from conftest import random_cloud, random_transform


def test_ply_roundtrip(tmp_path, rng):
    cloud = random_cloud(rng, n=40)
    path = str(tmp_path / "c.ply")
    dio.save_cloud_ply(path, cloud)
    again = dio.load_cloud(path)
    assert np.allclose(again.points, cloud.points, atol=0)
    assert np.allclose(again.normals, cloud.normals, atol=1e-15)


def test_xyzn_roundtrip(tmp_path, rng):
    cloud = random_cloud(rng, n=25)
    path = str(tmp_path / "c.xyzn")
    dio.save_cloud_xyzn(path, cloud)
    again = dio.load_cloud(path)
    assert np.allclose(again.points, cloud.points, atol=0)


def test_xyz_without_normals_estimates(tmp_path):
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-1, 1, (60, 2)), np.zeros(60)])
    path = tmp_path / "plane.xyz"
    path.write_text("\n".join(" ".join(f"{v:.8f}" for v in row) for row in pts) + "\n")
    cloud = dio.load_cloud(str(path))
    assert np.all(np.abs(cloud.normals @ np.array([0.0, 0, 1.0])) > 1 - 1e-6)


def test_xyz_with_comments_and_blank_lines(tmp_path):
    path = tmp_path / "c.xyz"
    path.write_text("# header\n\n0 0 0 0 0 1\n1 0 0 0 0 1  # trailing\n")
    cloud = dio.load_cloud(str(path))
    assert len(cloud) == 2


def test_xyz_ragged_line_reports_number(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("0 0 0\n1 1\n")
    with pytest.raises(FileFormatError) as err:
        dio.load_cloud(str(path))
    assert err.value.line == 2


def test_ply_bad_vertex_line(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 2\n"
        "property double x\nproperty double y\nproperty double z\n"
        "end_header\n0 0 0\n0 zero 0\n")
    with pytest.raises(FileFormatError) as err:
        dio.load_cloud(str(path))
    assert err.value.line == 9


def test_ply_missing_magic(tmp_path):
    path = tmp_path / "nomagic.ply"
    path.write_text("not a ply\n")
    with pytest.raises(FileFormatError):
        dio.load_cloud(str(path))


def test_correspondences_index_mode(tmp_path, rng):
    src = random_cloud(rng, n=10)
    tgt = random_cloud(rng, n=12)
    path = tmp_path / "corr.txt"
    path.write_text("# pairs\n0 3\n4 1\n9 11\n")
    s, t, cset = dio.load_correspondences(str(path), src, tgt)
    assert s is src and t is tgt
    assert list(cset.source_indices) == [0, 4, 9]
    assert list(cset.target_indices) == [3, 1, 11]


def test_correspondences_out_of_bounds(tmp_path, rng):
    src = random_cloud(rng, n=5)
    tgt = random_cloud(rng, n=5)
    path = tmp_path / "corr.txt"
    path.write_text("0 0\n7 0\n")
    with pytest.raises(FileFormatError) as err:
        dio.load_correspondences(str(path), src, tgt)
    assert err.value.line == 2


def test_correspondences_alphabetic_token_line_numbered(tmp_path, rng):
    src = random_cloud(rng, n=5)
    tgt = random_cloud(rng, n=5)
    path = tmp_path / "corr.txt"
    path.write_text("0 0\n1 1\n2 2\n3 3\n4 4\n0 1\nzero 2\n")
    with pytest.raises(FileFormatError) as err:
        dio.load_correspondences(str(path), src, tgt)
    assert err.value.line == 7
    assert "7" in str(err.value)


def test_correspondences_coordinate_mode_appends(tmp_path, rng):
    src = random_cloud(rng, n=30)
    tgt = random_cloud(rng, n=30)
    rows = ["%f %f %f %f %f %f" % (0.1 * i, 0, 0, 0, 0.1 * i, 0) for i in range(4)]
    path = tmp_path / "coords.txt"
    path.write_text("\n".join(rows) + "\n")
    s, t, cset = dio.load_correspondences(str(path), src, tgt)
    assert len(s) == 34 and len(t) == 34
    assert list(cset.source_indices) == [30, 31, 32, 33]
    assert np.allclose(s.points[30], [0, 0, 0])
    assert np.allclose(np.linalg.norm(s.normals, axis=1), 1.0, atol=1e-9)


def test_correspondences_mixed_mode_rejected(tmp_path, rng):
    src = random_cloud(rng, n=5)
    tgt = random_cloud(rng, n=5)
    path = tmp_path / "mixed.txt"
    path.write_text("0 0\n0 0 0 1 1 1\n")
    with pytest.raises(FileFormatError) as err:
        dio.load_correspondences(str(path), src, tgt)
    assert err.value.line == 2


def test_correspondences_empty_file_gives_empty_set(tmp_path, rng):
    src = random_cloud(rng, n=5)
    tgt = random_cloud(rng, n=5)
    path = tmp_path / "empty.txt"
    path.write_text("# nothing here\n")
    _, _, cset = dio.load_correspondences(str(path), src, tgt)
    assert len(cset) == 0


def test_transform_roundtrip_12(tmp_path, rng):
    t = random_transform(rng)
    path = str(tmp_path / "t.txt")
    dio.save_transform(path, t)
    again = dio.load_transform(path)
    assert np.allclose(again.matrix(), t.matrix(), atol=0)


def test_transform_16_numbers(tmp_path, rng):
    t = random_transform(rng)
    path = tmp_path / "t4.txt"
    rows = t.matrix4()
    path.write_text("\n".join(" ".join(f"{v:.17g}" for v in row) for row in rows) + "\n")
    again = dio.load_transform(str(path))
    assert np.allclose(again.matrix(), t.matrix(), atol=1e-15)


def test_transform_wrong_count(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2 3\n")
    with pytest.raises(FileFormatError):
        dio.load_transform(str(path))


def test_transform_invalid_rotation(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 0 0 0\n0 2 0 0\n0 0 2 0\n")
    with pytest.raises(FileFormatError):
        dio.load_transform(str(path))


def test_manifest_relative_paths(tmp_path):
    man = tmp_path / "m.txt"
    man.write_text("# jobs\na.ply b.ply c.txt gt.txt\nx.ply y.ply z.txt -\n")
    rows = dio.load_manifest(str(man))
    assert len(rows) == 2
    assert rows[0][0] == str(tmp_path / "a.ply")
    assert rows[0][3] == str(tmp_path / "gt.txt")
    assert rows[1][3] is None


def test_manifest_empty_rejected(tmp_path):
    man = tmp_path / "m.txt"
    man.write_text("# nothing\n")
    with pytest.raises(FileFormatError):
        dio.load_manifest(str(man))


def test_synth_files_roundtrip(tmp_path):
    scene = synth_scene(SynthSpec(n_points=500, n_correspondences=100, seed=3))
    src_path = str(tmp_path / "s.ply")
    tgt_path = str(tmp_path / "t.ply")
    corr_path = str(tmp_path / "c.txt")
    gt_path = str(tmp_path / "g.txt")
    dio.save_cloud_ply(src_path, scene.source)
    dio.save_cloud_ply(tgt_path, scene.target)
    dio.save_correspondences(corr_path, scene.correspondences)
    dio.save_transform(gt_path, scene.ground_truth)
    src = dio.load_cloud(src_path)
    tgt = dio.load_cloud(tgt_path)
    _, _, cset = dio.load_correspondences(corr_path, src, tgt)
    gt = dio.load_transform(gt_path)
    assert np.allclose(src.points, scene.source.points, atol=0)
    assert np.array_equal(cset.source_indices, scene.correspondences.source_indices)
    assert np.allclose(gt.matrix(), scene.ground_truth.matrix(), atol=0)

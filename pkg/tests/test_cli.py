import json
import os

import numpy as np
import pytest

from dualreg.cli import main


def run(args):
    return main(args)


def synth_dir(tmp_path, seed=0, **flags):
    out = tmp_path / f"scene{seed}"
    argv = ["synth", "--out-dir", str(out), "--n-points", "1500",
            "--n-correspondences", "300", "--inlier-ratio", "0.2",
            "--seed", str(seed)]
    for key, value in flags.items():
        argv += [f"--{key.replace('_', '-')}", str(value)]
    assert run(argv) == 0
    return out


def test_synth_writes_five_files(tmp_path):
    out = synth_dir(tmp_path)
    names = sorted(os.listdir(out))
    assert names == ["correspondences.txt", "gt_transform.txt", "manifest.txt",
                     "source.ply", "target.ply"]


def test_synth_deterministic_bytes(tmp_path):
    a = synth_dir(tmp_path / "a", seed=5)
    b = synth_dir(tmp_path / "b", seed=5)
    for name in os.listdir(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_synth_inlier_count_labelled(tmp_path, capsys):
    out = synth_dir(tmp_path, seed=2, inlier_ratio=0.02, n_correspondences=1000)
    capsys.readouterr()
    code = run(["filter", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"), "--stage", "coarse",
                "--gt", str(out / "gt_transform.txt"),
                "--out", str(tmp_path / "f.txt")])
    assert code == 0
    stdout = capsys.readouterr().out
    ir_line = [l for l in stdout.splitlines() if l.startswith("ir_input=")][0]
    assert float(ir_line.split("=")[1]) == pytest.approx(20 / 1000)


def test_register_roundtrip(tmp_path, capsys):
    out = synth_dir(tmp_path)
    capsys.readouterr()  # drain the synth output
    report_path = tmp_path / "report.txt"
    code = run(["register", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"),
                "--gt", str(out / "gt_transform.txt"),
                "--out", str(report_path), "--seed", "3"])
    assert code == 0
    stdout = capsys.readouterr().out
    first = stdout.strip().splitlines()[0].split()
    assert len(first) == 12  # row-major R then t
    np.array(first, dtype=float)
    assert report_path.exists()
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["success"] is True


def test_register_malformed_corr_exit_1(tmp_path, capsys):
    out = synth_dir(tmp_path)
    bad = tmp_path / "bad_corr.txt"
    lines = ["0 0", "1 1", "2 2", "3 3", "4 4", "5 5", "abc 6"]
    bad.write_text("\n".join(lines) + "\n")
    code = run(["register", str(out / "source.ply"), str(out / "target.ply"),
                str(bad), "--out", str(tmp_path / "r.txt")])
    assert code == 1
    err = capsys.readouterr().err
    assert "7" in err  # the offending line number is named


def test_register_empty_corr_exit_2(tmp_path, capsys):
    out = synth_dir(tmp_path)
    empty = tmp_path / "empty.txt"
    empty.write_text("# no pairs\n")
    code = run(["register", str(out / "source.ply"), str(out / "target.ply"),
                str(empty), "--out", str(tmp_path / "r.txt")])
    assert code == 2
    assert "correspondence" in capsys.readouterr().err.lower()


def test_register_missing_file_exit_1(tmp_path, capsys):
    code = run(["register", "nope.ply", "nope2.ply", "nope3.txt",
                "--out", str(tmp_path / "r.txt")])
    assert code == 1


def test_register_bad_override_rejected_before_work(tmp_path, capsys):
    out = synth_dir(tmp_path)
    code = run(["register", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"), "--set", "gamma=banana",
                "--out", str(tmp_path / "r.txt")])
    assert code == 1
    code = run(["register", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"), "--set", "no_such_knob=1",
                "--out", str(tmp_path / "r.txt")])
    assert code == 1


def test_filter_refine_prints_transform(tmp_path, capsys):
    out = synth_dir(tmp_path, seed=4)
    capsys.readouterr()  # drain
    code = run(["filter", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"), "--stage", "refine",
                "--gt", str(out / "gt_transform.txt"),
                "--out", str(tmp_path / "filtered.txt")])
    assert code == 0
    stdout = capsys.readouterr().out
    tline = [l for l in stdout.splitlines() if l.startswith("transform=")]
    assert len(tline) == 1
    assert len(tline[0].split("=", 1)[1].split()) == 12
    ir_in = float([l for l in stdout.splitlines() if l.startswith("ir_input=")][0].split("=")[1])
    ir_out = float([l for l in stdout.splitlines() if l.startswith("ir_output=")][0].split("=")[1])
    assert ir_out > ir_in
    # Filtered file must be loadable as an index-mode correspondence file.
    body = (tmp_path / "filtered.txt").read_text().strip().splitlines()
    assert all(len(l.split()) == 2 for l in body)


def test_filter_coarse_all_inliers_identity(tmp_path, capsys):
    out = synth_dir(tmp_path, seed=6, inlier_ratio=1.0)
    capsys.readouterr()  # drain
    code = run(["filter", str(out / "source.ply"), str(out / "target.ply"),
                str(out / "correspondences.txt"), "--stage", "coarse",
                "--out", str(tmp_path / "filtered.txt")])
    assert code == 0
    stdout = capsys.readouterr().out
    n_in = int([l for l in stdout.splitlines() if l.startswith("n_input=")][0].split("=")[1])
    n_out = int([l for l in stdout.splitlines() if l.startswith("n_output=")][0].split("=")[1])
    assert n_in == n_out == 300


def _eval_setup(tmp_path, n_jobs=3):
    scene_dirs = [synth_dir(tmp_path, seed=s) for s in range(n_jobs)]
    man = tmp_path / "manifest.txt"
    rows = []
    for d in scene_dirs:
        rows.append(f"{d}/source.ply {d}/target.ply {d}/correspondences.txt {d}/gt_transform.txt")
    man.write_text("\n".join(rows) + "\n")
    return man


def test_eval_aggregates(tmp_path, capsys):
    man = _eval_setup(tmp_path)
    capsys.readouterr()  # drain
    out_dir = tmp_path / "reports"
    code = run(["eval", str(man), "--out", str(out_dir), "--seed", "1"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "recall_pct=100.0000" in stdout
    assert (out_dir / "job_0000.txt").exists()
    assert (out_dir / "aggregate.json").exists()


def test_eval_empty_manifest_exit_1(tmp_path, capsys):
    man = tmp_path / "m.txt"
    man.write_text("# empty\n")
    assert run(["eval", str(man)]) == 1


def test_eval_bad_row_marked_failed(tmp_path, capsys):
    man = _eval_setup(tmp_path, n_jobs=2)
    capsys.readouterr()  # drain
    with open(man, "a", encoding="utf-8") as fh:
        fh.write("missing.ply missing.ply missing.txt -\n")
    code = run(["eval", str(man), "--seed", "1"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "status=failed" in stdout
    assert "n_failed=1" in stdout


def _strip_timing(text):
    return "\n".join(l for l in text.splitlines()
                     if not l.startswith("time_") and not l.startswith("mean_time_ms"))


def test_eval_deterministic_modulo_timings(tmp_path):
    man = _eval_setup(tmp_path, n_jobs=2)
    out_a = tmp_path / "ra"
    out_b = tmp_path / "rb"
    assert run(["eval", str(man), "--out", str(out_a), "--seed", "9"]) == 0
    assert run(["eval", str(man), "--out", str(out_b), "--seed", "9"]) == 0
    for name in sorted(os.listdir(out_a)):
        a = (out_a / name).read_text()
        b = (out_b / name).read_text()
        if name.endswith(".json"):
            da, db = json.loads(a), json.loads(b)
            da.pop("timings_ms", None), db.pop("timings_ms", None)
            da.pop("mean_time_ms", None), db.pop("mean_time_ms", None)
            assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
        else:
            assert _strip_timing(a) == _strip_timing(b)


def test_eval_parallel_matches_serial(tmp_path):
    man = _eval_setup(tmp_path, n_jobs=3)
    out_serial = tmp_path / "serial"
    out_par = tmp_path / "par"
    assert run(["eval", str(man), "--out", str(out_serial), "--seed", "2"]) == 0
    assert run(["eval", str(man), "--out", str(out_par), "--seed", "2",
                "--jobs", "3"]) == 0
    for name in sorted(os.listdir(out_serial)):
        if name.endswith(".json"):
            a = json.loads((out_serial / name).read_text())
            b = json.loads((out_par / name).read_text())
            a.pop("timings_ms", None), b.pop("timings_ms", None)
            a.pop("mean_time_ms", None), b.pop("mean_time_ms", None)
            assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    for sub in ("register", "eval", "synth", "filter"):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
    capsys.readouterr()

"""Command-line interface.

Subcommands: register (one pair), eval (manifest batch), synth (generate a
scene), filter (run only the correspondence filtering stages).

Exit codes: 0 success, 1 usage or I/O failure, 2 algorithmic failure.
All randomness flows from --seed; DUALREG_LOG sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io as dio
from .config import PRESETS, PipelineConfig, Preset, apply_overrides
from .errors import ConfigError, DualRegError, FileFormatError
from .metrics import registration_recall
from .pipeline import RegistrationJob, register, run_stage_filter
from .synth import SynthSpec, gt_inlier_ratio, synth_scene

log = logging.getLogger("dualreg")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ALGORITHM = 2


def _setup_logging(verbosity: int):
    env = os.environ.get("DUALREG_LOG", "").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO,
             "warning": logging.WARNING, "error": logging.ERROR}.get(env)
    if level is None:
        level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbosity, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _build_config(preset_name: str, overrides: list[str], seed: int) -> tuple[PipelineConfig, Preset]:
    preset = PRESETS.get(preset_name)
    if preset is None:
        raise ConfigError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
    cfg = apply_overrides(preset.config, _parse_overrides(overrides))
    return cfg.replace(rng_seed=seed), preset


def _load_job(args, cfg: PipelineConfig, preset: Preset) -> RegistrationJob:
    source = dio.load_cloud(args.source, normal_k=cfg.normal_k)
    target = dio.load_cloud(args.target, normal_k=cfg.normal_k)
    source, target, cset = dio.load_correspondences(
        args.correspondences, source, target, normal_k=cfg.normal_k)
    gt = dio.load_transform(args.gt) if getattr(args, "gt", None) else None
    return RegistrationJob(source=source, target=target, correspondences=cset,
                           config=cfg, ground_truth=gt, preset=preset)


def _report_paths(out: str) -> tuple[str, str]:
    stem, ext = os.path.splitext(out)
    if ext == ".json":
        return stem + ".txt", out
    return out, stem + ".json"


def _write_report(report, out: str):
    text_path, json_path = _report_paths(out)
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    log.info("report written to %s and %s", text_path, json_path)


def cmd_register(args) -> int:
    cfg, preset = _build_config(args.preset, args.set, args.seed)
    job = _load_job(args, cfg, preset)
    report = register(job)
    print(" ".join(f"{x:.17g}" for x in report.transform.flat()))
    _write_report(report, args.out)
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg, preset = _build_config(args.preset, args.set, args.seed)
    job = _load_job(args, cfg, preset)
    selected, indices, transform = run_stage_filter(job, args.stage)
    dio.save_correspondences(args.out, selected)
    print(f"stage={args.stage}")
    print(f"n_input={len(job.correspondences)}")
    print(f"n_output={len(selected)}")
    if job.ground_truth is not None:
        ir_in = gt_inlier_ratio(job.correspondences, job.source, job.target,
                                job.ground_truth, cfg.gamma)
        ir_out = gt_inlier_ratio(selected, job.source, job.target,
                                 job.ground_truth, cfg.gamma)
        print(f"ir_input={ir_in:.6f}")
        print(f"ir_output={ir_out:.6f}")
    if transform is not None:
        print("transform=" + " ".join(f"{x:.17g}" for x in transform.flat()))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_points=args.n_points,
        overlap_fraction=args.overlap,
        noise_sigma=args.noise,
        transform_magnitude=args.magnitude,
        inlier_ratio=args.inlier_ratio,
        n_correspondences=args.n_correspondences,
        seed=args.seed,
        gamma=args.gamma,
    )
    try:
        scene = synth_scene(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    os.makedirs(args.out_dir, exist_ok=True)
    paths = {name: os.path.join(args.out_dir, name) for name in
             ("source.ply", "target.ply", "correspondences.txt",
              "gt_transform.txt", "manifest.txt")}
    dio.save_cloud_ply(paths["source.ply"], scene.source)
    dio.save_cloud_ply(paths["target.ply"], scene.target)
    dio.save_correspondences(paths["correspondences.txt"], scene.correspondences)
    dio.save_transform(paths["gt_transform.txt"], scene.ground_truth)
    with open(paths["manifest.txt"], "w", encoding="utf-8") as fh:
        fh.write("source.ply target.ply correspondences.txt gt_transform.txt\n")
    for p in paths.values():
        print(p)
    return EXIT_OK


def _derive_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(master, index)).generate_state(1)[0])


def cmd_eval(args) -> int:
    cfg, preset = _build_config(args.preset, args.set, args.seed)
    rows = dio.load_manifest(args.manifest)
    if args.out:
        os.makedirs(args.out, exist_ok=True)

    def run_row(idx_row):
        idx, (src_path, tgt_path, corr_path, gt_path) = idx_row
        row_cfg = cfg.replace(rng_seed=_derive_seed(args.seed, idx))
        try:
            source = dio.load_cloud(src_path, normal_k=row_cfg.normal_k)
            target = dio.load_cloud(tgt_path, normal_k=row_cfg.normal_k)
            source, target, cset = dio.load_correspondences(
                corr_path, source, target, normal_k=row_cfg.normal_k)
            gt = dio.load_transform(gt_path) if gt_path else None
            job = RegistrationJob(source=source, target=target, correspondences=cset,
                                  config=row_cfg, ground_truth=gt, preset=preset)
            return register(job)
        except (DualRegError, OSError, ValueError) as exc:
            log.warning("job %d failed: %s", idx, exc)
            return exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_row, enumerate(rows)))
    else:
        results = [run_row(item) for item in enumerate(rows)]

    reports = []
    lines = []
    for idx, result in enumerate(results):
        if isinstance(result, Exception):
            lines.append(f"job={idx} status=failed error={result}")
            continue
        reports.append(result)
        status = "ok" if result.success is None else ("success" if result.success else "miss")
        extra = ""
        if result.re_deg is not None:
            extra = (f" re_deg={result.re_deg:.4f} te_cm={result.te * 100.0:.4f}"
                     f" rmse_cm={result.rmse_val * 100.0:.4f}")
        lines.append(f"job={idx} status={status}{extra}")
        if args.out:
            _write_report(result, os.path.join(args.out, f"job_{idx:04d}.txt"))

    with_gt = [r for r in reports if r.re_deg is not None]
    agg: dict[str, object] = {
        "n_jobs": len(rows),
        "n_completed": len(reports),
        "n_failed": len(rows) - len(reports),
    }
    if with_gt:
        agg["recall_pct"] = registration_recall(with_gt, preset)
        wins = [r for r in with_gt if r.success]
        pool_ = wins if wins else with_gt
        agg["mean_re_deg"] = float(np.mean([r.re_deg for r in pool_]))
        agg["mean_te_cm"] = float(np.mean([r.te for r in pool_])) * 100.0
        agg["mean_rmse_cm"] = float(np.mean([r.rmse_val for r in pool_])) * 100.0
    mean_time = float(np.mean([sum(r.timings_ms.values()) for r in reports])) if reports else 0.0

    for line in lines:
        print(line)
    for key in sorted(agg):
        value = agg[key]
        print(f"{key}={value:.4f}" if isinstance(value, float) else f"{key}={value}")
    print(f"mean_time_ms={mean_time:.3f}")

    if args.out:
        agg_path = os.path.join(args.out, "aggregate.txt")
        with open(agg_path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
            for key in sorted(agg):
                value = agg[key]
                fh.write(f"{key}={value:.4f}\n" if isinstance(value, float)
                         else f"{key}={value}\n")
            fh.write(f"mean_time_ms={mean_time:.3f}\n")
        with open(os.path.join(args.out, "aggregate.json"), "w", encoding="utf-8") as fh:
            json.dump({"rows": lines, "aggregate": agg, "mean_time_ms": mean_time},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualreg",
        description="Rigid point-cloud registration from putative correspondences.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--preset", default="indoor", choices=sorted(PRESETS),
                       help="parameter preset (default indoor)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field (repeatable)")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")

    p_reg = sub.add_parser("register", help="register one source/target pair")
    p_reg.add_argument("source")
    p_reg.add_argument("target")
    p_reg.add_argument("correspondences")
    p_reg.add_argument("--gt", help="ground-truth transform file (adds metrics)")
    p_reg.add_argument("--out", default="report.txt", help="report path")
    common(p_reg)
    p_reg.set_defaults(func=cmd_register)

    p_eval = sub.add_parser("eval", help="batch evaluation from a manifest")
    p_eval.add_argument("manifest")
    p_eval.add_argument("--out", help="directory for per-job reports")
    p_eval.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--n-points", type=int, default=4000)
    p_synth.add_argument("--overlap", type=float, default=0.7)
    p_synth.add_argument("--noise", type=float, default=0.1 / 6.0)
    p_synth.add_argument("--magnitude", type=float, default=0.5)
    p_synth.add_argument("--inlier-ratio", type=float, default=0.2)
    p_synth.add_argument("--n-correspondences", type=int, default=1000)
    p_synth.add_argument("--gamma", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.set_defaults(func=cmd_synth)

    p_filt = sub.add_parser("filter", help="run only the filtering stages")
    p_filt.add_argument("source")
    p_filt.add_argument("target")
    p_filt.add_argument("correspondences")
    p_filt.add_argument("--stage", choices=("coarse", "refine"), default="refine")
    p_filt.add_argument("--gt", help="ground-truth transform file (adds inlier ratios)")
    p_filt.add_argument("--out", default="filtered.txt", help="filtered correspondence file")
    common(p_filt)
    p_filt.set_defaults(func=cmd_filter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except (FileFormatError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DualRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM
    except Exception as exc:  # pragma: no cover - defensive
        log.debug("unexpected failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    raise SystemExit(main())

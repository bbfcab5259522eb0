"""End-to-end registration: coarse filter -> refinement -> dual-space solve."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .cloud import OrientedPointCloud, cloud_resolution, voxel_downsample
from .coarse_filter import run_coarse_filter
from .config import PipelineConfig, Preset
from .correspondences import CorrespondenceSet
from .dual_space import SolverTrace, build_proxies, solve_dual_space
from .errors import DualRegError, StageError
from .metrics import is_success, rmse, rotation_error, translation_error
from .refinement import run_refinement
from .synth import gt_inlier_ratio
from .transforms import RigidTransform


@dataclass(frozen=True)
class RegistrationJob:
    """One registration problem: clouds, raw correspondences, parameters."""

    source: OrientedPointCloud
    target: OrientedPointCloud
    correspondences: CorrespondenceSet
    config: PipelineConfig = field(default_factory=PipelineConfig)
    ground_truth: RigidTransform | None = None
    preset: Preset | None = None

    def __post_init__(self):
        self.correspondences.validate_against(self.source, self.target)


@dataclass
class RegistrationReport:
    """Everything the pipeline learned about one job.

    Sizes and ground-truth inlier ratios are recorded per stage; metrics and
    the success flag are present only when the job carried a ground truth.
    Timings are wall-clock milliseconds and excluded from determinism
    guarantees.
    """

    transform: RigidTransform
    n_input: int
    n_coarse: int
    n_refined: int
    low_confidence: bool
    stalled: bool
    solver_iterations: int
    solver_final_delta: float
    sigma: float
    coarse_iterations: int
    refine_iterations: int
    n_source_proxy: int
    n_target_proxy: int
    preset_name: str | None = None
    ir_input: float | None = None
    ir_coarse: float | None = None
    ir_refined: float | None = None
    re_deg: float | None = None
    te: float | None = None
    rmse_val: float | None = None
    success: bool | None = None
    refine_re_deg: float | None = None
    refine_te: float | None = None
    refine_transform: RigidTransform | None = None
    timings_ms: dict = field(default_factory=dict)
    trace: SolverTrace | None = None
    error: str | None = None

    TIMING_KEYS = ("timings_ms",)

    def to_dict(self, with_timings: bool = True) -> dict:
        d = {
            "transform": {
                "rotation": self.transform.rotation.tolist(),
                "translation": self.transform.translation.tolist(),
            },
            "stages": {
                "n_input": self.n_input,
                "n_coarse": self.n_coarse,
                "n_refined": self.n_refined,
                "ir_input": self.ir_input,
                "ir_coarse": self.ir_coarse,
                "ir_refined": self.ir_refined,
            },
            "flags": {
                "low_confidence": self.low_confidence,
                "stalled": self.stalled,
            },
            "solver": {
                "iterations": self.solver_iterations,
                "final_delta": self.solver_final_delta,
                "sigma": self.sigma,
                "coarse_iterations": self.coarse_iterations,
                "refine_iterations": self.refine_iterations,
                "n_source_proxy": self.n_source_proxy,
                "n_target_proxy": self.n_target_proxy,
            },
            "metrics": None,
            "preset": self.preset_name,
            "success": self.success,
            "error": self.error,
        }
        if self.re_deg is not None:
            d["metrics"] = {
                "re_deg": self.re_deg,
                "te_cm": self.te * 100.0,
                "rmse_cm": self.rmse_val * 100.0,
                "refine_re_deg": self.refine_re_deg,
                "refine_te_cm": None if self.refine_te is None else self.refine_te * 100.0,
            }
        if with_timings:
            d["timings_ms"] = dict(self.timings_ms)
        return d

    def to_json(self, with_timings: bool = True) -> str:
        return json.dumps(self.to_dict(with_timings), indent=2, sort_keys=True)

    def to_text(self, with_timings: bool = True) -> str:
        """Flat key=value rendering; timing lines carry a time_ prefix."""
        lines: list[str] = []

        def emit(prefix: str, obj):
            if isinstance(obj, dict):
                for key in sorted(obj):
                    emit(f"{prefix}{key}.", obj[key])
            else:
                lines.append(f"{prefix.rstrip('.')}={_fmt(obj)}")

        emit("", self.to_dict(with_timings=False))
        if with_timings:
            for key in sorted(self.timings_ms):
                lines.append(f"time_{key}_ms={self.timings_ms[key]:.3f}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, list):
        return json.dumps(value)
    return str(value)


def register(job: RegistrationJob, keep_trace: bool = False) -> RegistrationReport:
    """Run the full pipeline on one job.

    Deterministic for a fixed config.rng_seed (timings aside). Stage
    failures are re-raised as StageError naming the failed stage.
    """
    cfg = job.config
    rng = np.random.default_rng(cfg.rng_seed)
    timings: dict[str, float] = {}

    def staged(name, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except DualRegError as exc:
            raise StageError(name, exc) from exc
        timings[name] = (time.perf_counter() - start) * 1e3
        return result

    resolution = staged("setup", lambda: (cloud_resolution(job.source)
                                          + cloud_resolution(job.target)) / 2.0)
    params = cfg.resolve(resolution)

    coarse = staged("coarse", lambda: run_coarse_filter(
        job.correspondences, job.source, job.target, params, rng))
    refined = staged("refine", lambda: run_refinement(
        coarse.selected, job.source, job.target, params, rng))

    refined_global = coarse.indices[refined.inlier_indices]
    anchors = job.correspondences.subset(refined_global)
    anchor_v = job.source.points[anchors.source_indices]
    anchor_u = job.target.points[anchors.target_indices]

    def build():
        src_down = voxel_downsample(job.source, params.voxel_size)
        tgt_down = voxel_downsample(job.target, params.voxel_size)
        return build_proxies(anchor_v, anchor_u, src_down, tgt_down, params)

    proxies = staged("proxies", build)
    final, trace = staged("dual", lambda: solve_dual_space(
        anchor_v, anchor_u, refined.probs[refined.inlier_indices],
        refined.transform, proxies, params))

    report = RegistrationReport(
        transform=final,
        n_input=len(job.correspondences),
        n_coarse=len(coarse.indices),
        n_refined=len(refined_global),
        low_confidence=coarse.low_confidence,
        stalled=trace.stalled,
        solver_iterations=trace.iterations,
        solver_final_delta=trace.final_delta,
        sigma=trace.sigma,
        coarse_iterations=coarse.iterations,
        refine_iterations=refined.iterations,
        n_source_proxy=len(proxies.source_points),
        n_target_proxy=len(proxies.target_points),
        preset_name=job.preset.name if job.preset else None,
        refine_transform=refined.transform,
        timings_ms=timings,
        trace=trace if keep_trace else None,
    )

    if job.ground_truth is not None:
        gt = job.ground_truth
        report.ir_input = gt_inlier_ratio(job.correspondences, job.source,
                                          job.target, gt, params.gamma)
        report.ir_coarse = gt_inlier_ratio(coarse.selected, job.source,
                                           job.target, gt, params.gamma)
        report.ir_refined = gt_inlier_ratio(anchors, job.source, job.target,
                                            gt, params.gamma)
        report.re_deg = rotation_error(final, gt)
        report.te = translation_error(final, gt)
        report.rmse_val = rmse(final, gt, job.source)
        report.refine_re_deg = rotation_error(refined.transform, gt)
        report.refine_te = translation_error(refined.transform, gt)
        if job.preset is not None:
            report.success = is_success(report.re_deg, report.te, job.preset)
    return report


def run_stage_filter(job: RegistrationJob, stage: str):
    """Run only the filtering stages; used by the CLI's filter mode.

    Returns (selected CorrespondenceSet, indices into the input, transform
    or None). stage is "coarse" or "refine".
    """
    if stage not in ("coarse", "refine"):
        raise ValueError(f"stage must be 'coarse' or 'refine', got {stage!r}")
    cfg = job.config
    rng = np.random.default_rng(cfg.rng_seed)
    resolution = (cloud_resolution(job.source) + cloud_resolution(job.target)) / 2.0
    params = cfg.resolve(resolution)
    coarse = run_coarse_filter(job.correspondences, job.source, job.target, params, rng)
    if stage == "coarse":
        return coarse.selected, coarse.indices, None
    refined = run_refinement(coarse.selected, job.source, job.target, params, rng)
    idx = coarse.indices[refined.inlier_indices]
    return job.correspondences.subset(idx), idx, refined.transform

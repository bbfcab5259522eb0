"""Rigid point-cloud registration from putative correspondences.

Pipeline: a one-point RANSAC coarse filter over the raw correspondences, a
probability-weighted three-point RANSAC refinement, then a joint solve over
the surviving anchors and radius-aggregated geometric proxies.
"""

from .cloud import OrientedPointCloud, cloud_resolution, estimate_normals, voxel_downsample
from .coarse_filter import (
    CoarseFilterResult,
    ConsensusSet,
    CorrespondenceView,
    initial_consensus,
    length_discrepancy,
    pairwise_consensus,
    run_coarse_filter,
    symmetry_check,
    tangential_distance,
    termination_bound,
)
from .config import PRESETS, PipelineConfig, Preset, ResolvedParams
from .correspondences import Correspondence, CorrespondenceSet
from .dual_space import (
    ProxySets,
    SolverTrace,
    assign_closest,
    build_proxies,
    compute_sigma,
    objective,
    robust_weight,
    solve_dual_space,
)
from .errors import (
    ConfigError,
    DegenerateCloudError,
    DegenerateSampleError,
    DualRegError,
    FileFormatError,
    InsufficientCorrespondencesError,
    NoProxySupportError,
    StageError,
)
from .kabsch import WeightedPairSet, solve_orthogonal, solve_rigid
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import registration_recall, rmse, rotation_error, translation_error
from .pipeline import RegistrationJob, RegistrationReport, register
from .refinement import (
    RefinementResult,
    evaluate_hypothesis,
    run_refinement,
    sample_triple,
    update_probabilities,
)
from .spatial import SpatialIndex
from .synth import SynthSpec, SyntheticScene, gt_inlier_ratio, synth_scene
from .transforms import RigidTransform, random_rotation, rotation_about_axis

__version__ = "0.1.0"

__all__ = [
    "OrientedPointCloud", "cloud_resolution", "estimate_normals", "voxel_downsample",
    "CoarseFilterResult", "ConsensusSet", "CorrespondenceView", "initial_consensus",
    "length_discrepancy", "pairwise_consensus", "run_coarse_filter", "symmetry_check",
    "tangential_distance", "termination_bound",
    "PRESETS", "PipelineConfig", "Preset", "ResolvedParams",
    "Correspondence", "CorrespondenceSet",
    "ProxySets", "SolverTrace", "assign_closest", "build_proxies", "compute_sigma",
    "objective", "robust_weight", "solve_dual_space",
    "ConfigError", "DegenerateCloudError", "DegenerateSampleError", "DualRegError",
    "FileFormatError", "InsufficientCorrespondencesError", "NoProxySupportError",
    "StageError",
    "WeightedPairSet", "solve_orthogonal", "solve_rigid",
    "KERNEL_BACKEND",
    "registration_recall", "rmse", "rotation_error", "translation_error",
    "RegistrationJob", "RegistrationReport", "register",
    "RefinementResult", "evaluate_hypothesis", "run_refinement", "sample_triple",
    "update_probabilities",
    "SpatialIndex",
    "SynthSpec", "SyntheticScene", "gt_inlier_ratio", "synth_scene",
    "RigidTransform", "random_rotation", "rotation_about_axis",
    "__version__",
]

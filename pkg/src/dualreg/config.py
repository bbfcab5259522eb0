"""Pipeline parameters, scale resolution, and dataset presets.

Lengths (tau, delta, gamma, beta, voxel size) are in the cloud's length
unit, meters by convention. tau, beta, and the voxel size default to
multiples of the cloud resolution and are resolved per registration job;
delta defaults to 2 * gamma.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the registration pipeline.

    Fields left as None are derived at resolve() time:
      tau   <- tau_multiple * resolution
      beta  <- beta_multiple * resolution
      voxel_size <- voxel_multiple * resolution
      delta <- 2 * gamma
    """

    tau: float | None = None            # length-consistency bound
    delta: float | None = None          # tangential-distance bound
    gamma: float = 0.1                  # inlier residual threshold
    alpha: float = 0.2                  # consensus acceptance factor
    beta: float | None = None           # proxy neighborhood radius
    lambda_conf: float = 0.99           # RANSAC confidence
    lambda_bal: float = 0.05            # anchor-term weight in the joint objective
    eps_term: float = 0.001             # solver termination threshold
    max_dual_iters: int = 200           # solver iteration cap
    subset_fraction: float = 0.4        # high-confidence fraction for the sigma rule
    voxel_multiple: float = 5.0
    tau_multiple: float = 3.0
    beta_multiple: float = 50.0
    voxel_size: float | None = None
    normal_k: int = 20                  # k-NN size for normal estimation
    proxy_mode: str = "whole"           # "whole" or "patch" proxy assignment
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("tau", "delta", "gamma", "beta", "voxel_size"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be strictly positive, got {v}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.lambda_conf < 1.0:
            raise ConfigError(f"lambda_conf must be in (0, 1), got {self.lambda_conf}")
        if self.lambda_bal < 0.0:
            raise ConfigError(f"lambda_bal must be non-negative, got {self.lambda_bal}")
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ConfigError(f"subset_fraction must be in (0, 1], got {self.subset_fraction}")
        if self.eps_term <= 0.0:
            raise ConfigError(f"eps_term must be positive, got {self.eps_term}")
        if self.max_dual_iters < 0:
            raise ConfigError(f"max_dual_iters must be >= 0, got {self.max_dual_iters}")
        for name in ("voxel_multiple", "tau_multiple", "beta_multiple"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.normal_k < 3:
            raise ConfigError(f"normal_k must be >= 3, got {self.normal_k}")
        if self.proxy_mode not in ("whole", "patch"):
            raise ConfigError(f"proxy_mode must be 'whole' or 'patch', got {self.proxy_mode!r}")
        if self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be non-negative, got {self.rng_seed}")

    def resolve(self, resolution: float) -> "ResolvedParams":
        """Fill the scale-dependent parameters from the cloud resolution."""
        if not resolution > 0:
            raise ConfigError(f"resolution must be positive, got {resolution}")
        return ResolvedParams(
            tau=self.tau if self.tau is not None else self.tau_multiple * resolution,
            delta=self.delta if self.delta is not None else 2.0 * self.gamma,
            gamma=self.gamma,
            alpha=self.alpha,
            beta=self.beta if self.beta is not None else self.beta_multiple * resolution,
            lambda_conf=self.lambda_conf,
            lambda_bal=self.lambda_bal,
            eps_term=self.eps_term,
            max_dual_iters=self.max_dual_iters,
            subset_fraction=self.subset_fraction,
            voxel_size=(self.voxel_size if self.voxel_size is not None
                        else self.voxel_multiple * resolution),
            normal_k=self.normal_k,
            proxy_mode=self.proxy_mode,
            rng_seed=self.rng_seed,
        )

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ResolvedParams:
    """PipelineConfig with every length made concrete."""

    tau: float
    delta: float
    gamma: float
    alpha: float
    beta: float
    lambda_conf: float
    lambda_bal: float
    eps_term: float
    max_dual_iters: int
    subset_fraction: float
    voxel_size: float
    normal_k: int
    proxy_mode: str
    rng_seed: int


@dataclass(frozen=True)
class Preset:
    """A named parameter bundle plus its success thresholds."""

    name: str
    config: PipelineConfig
    re_max_deg: float
    te_max: float


PRESETS: dict[str, Preset] = {
    "indoor": Preset(
        name="indoor",
        config=PipelineConfig(gamma=0.1, alpha=0.2, lambda_bal=0.05),
        re_max_deg=15.0,
        te_max=0.30,
    ),
    "outdoor": Preset(
        name="outdoor",
        config=PipelineConfig(gamma=0.6, alpha=0.9, lambda_bal=1.0),
        re_max_deg=5.0,
        te_max=0.60,
    ),
}

_FIELD_PARSERS = {
    "tau": float, "delta": float, "gamma": float, "alpha": float, "beta": float,
    "lambda_conf": float, "lambda_bal": float, "eps_term": float,
    "max_dual_iters": int, "subset_fraction": float, "voxel_multiple": float,
    "tau_multiple": float, "beta_multiple": float, "voxel_size": float,
    "normal_k": int, "proxy_mode": str, "rng_seed": int,
}


def apply_overrides(config: PipelineConfig, overrides: dict[str, str]) -> PipelineConfig:
    """Apply `key=value` string overrides, type-checked before any work runs."""
    changes = {}
    for key, raw in overrides.items():
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"unknown config field {key!r}")
        try:
            changes[key] = parser(raw)
        except ValueError:
            raise ConfigError(f"invalid value {raw!r} for {key}") from None
    return config.replace(**changes)

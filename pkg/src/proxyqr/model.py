"""Model declaration: outcome, proxies, quantile level, and priors.

A model couples an outcome vector with K proxy vectors for one latent
covariate.  Exactly one proxy must be the benchmark (identity link); it pins
the location/scale of the latent covariate.  The remaining proxies link to the
covariate through a polynomial or a penalized-spline mean function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BenchmarkProxy",
    "PolynomialProxy",
    "SplineProxy",
    "PriorConfig",
    "ModelSpec",
    "validate_model",
]


@dataclass(frozen=True)
class BenchmarkProxy:
    """Proxy with identity mean: w = x + noise."""


@dataclass(frozen=True)
class PolynomialProxy:
    """Proxy with polynomial mean of the given degree."""

    degree: int = 2

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("polynomial proxy degree must be >= 1")


@dataclass(frozen=True)
class SplineProxy:
    """Proxy whose mean is a penalized truncated-power spline of the covariate."""

    degree: int = 3

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("spline proxy degree must be >= 1")


ProxySpec = BenchmarkProxy | PolynomialProxy | SplineProxy


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters for every conjugate prior in the model.

    Inverse-gamma priors are (shape, scale) with density ∝ v^{-a-1} e^{-b/v};
    gamma priors are (shape, rate).  Defaults are weakly informative and keep
    every update conjugate.
    """

    proxy_var_shape: float = 0.01   # a_k for each proxy error variance
    proxy_var_scale: float = 0.01   # b_k
    x_var_shape: float = 0.01       # a_x for the latent-covariate variance
    x_var_scale: float = 0.01       # b_x
    smooth_shape: float = 0.01      # a for every smoothing precision
    smooth_rate: float = 0.01       # b (rate)
    ald_prec_shape: float = 0.01    # a for the ALD precision (mixture engine)
    ald_prec_rate: float = 0.01     # b (rate)
    x_mean_loc: float = 0.0         # prior mean of the latent-covariate mean
    x_mean_var: float = 100.0       # its prior variance
    coef_loc: float = 0.0           # prior mean of each polynomial coefficient
    coef_var: float = 100.0         # prior variance (V = coef_var * I)

    def __post_init__(self):
        for name in (
            "proxy_var_shape", "proxy_var_scale", "x_var_shape", "x_var_scale",
            "smooth_shape", "smooth_rate", "ald_prec_shape", "ald_prec_rate",
            "x_mean_var", "coef_var",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ModelSpec:
    """Validated model: immutable and safe to share across workers."""

    y: np.ndarray
    proxies: tuple[np.ndarray, ...]
    specs: tuple[ProxySpec, ...]
    p: float
    benchmark: int
    priors: PriorConfig = field(default_factory=PriorConfig)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def n_proxies(self) -> int:
        return len(self.proxies)

    @property
    def benchmark_values(self) -> np.ndarray:
        return self.proxies[self.benchmark]


def validate_model(y, proxies, specs, p, priors: PriorConfig | None = None) -> ModelSpec:
    """Check shapes and invariants and return an immutable ModelSpec.

    Raises ValueError on: quantile level outside (0,1), fewer than 3
    observations, length mismatch between outcome and proxies, non-finite
    values, or anything other than exactly one benchmark proxy.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level out of range: p={p} not in (0, 1)")
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] < 3:
        raise ValueError("outcome must be a vector with at least 3 observations")
    if len(proxies) != len(specs) or len(proxies) < 1:
        raise ValueError("need one spec per proxy vector and at least one proxy")
    w = tuple(np.ascontiguousarray(v, dtype=float) for v in proxies)
    for k, v in enumerate(w):
        if v.shape != y.shape:
            raise ValueError(f"length mismatch: proxy {k} has shape {v.shape}, outcome {y.shape}")
    if not np.isfinite(y).all() or not all(np.isfinite(v).all() for v in w):
        raise ValueError("outcome and proxies must be finite")
    bench = [k for k, s in enumerate(specs) if isinstance(s, BenchmarkProxy)]
    if len(bench) == 0:
        raise ValueError("no benchmark proxy: exactly one proxy must have identity mean")
    if len(bench) > 1:
        raise ValueError("multiple benchmark proxies: exactly one is allowed")
    for s in specs:
        if not isinstance(s, (BenchmarkProxy, PolynomialProxy, SplineProxy)):
            raise ValueError(f"unknown proxy spec: {s!r}")
    return ModelSpec(
        y=y,
        proxies=w,
        specs=tuple(specs),
        p=float(p),
        benchmark=bench[0],
        priors=priors if priors is not None else PriorConfig(),
    )

"""Chain configuration and the container for retained posterior draws."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .model import ModelSpec, PolynomialProxy, SplineProxy
from .splines import NcsBasis, PsplineBasis

__all__ = ["ChainConfig", "PosteriorSamples"]


@dataclass(frozen=True)
class ChainConfig:
    """Run-length, knot, and proposal-tuning settings for one chain.

    Adaptation runs only during burn-in (Robbins-Monro on log proposal
    scales); scales are frozen afterwards so the retained draws come from a
    fixed kernel.
    """

    iterations: int = 20_000
    burnin: int = 5_000
    thin: int = 10
    n_knots: int = 30
    knot_pad: float = 0.5          # knot range pad, in anchor-sd units
    spline_degree: int = 3         # degree for spline curves and spline proxies
    target_accept_joint: float = 0.234
    target_accept_site: float = 0.44
    curve_scale0: float | None = None   # spherical curve-step scale (auto if None)
    smooth_logsd0: float = 0.5          # log-normal step for the smoothing precision
    x_scale_factor: float = 0.5         # initial per-site x step, in anchor-sd units
    adapt_decay: float = 0.6

    def __post_init__(self):
        if self.iterations <= self.burnin or self.burnin < 0:
            raise ValueError("need iterations > burnin >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_knots < 4:
            raise ValueError("need at least 4 knots")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burnin) // self.thin


@dataclass
class PosteriorSamples:
    """Thinned draws of every parameter block plus run metadata.

    curve holds spline values at the knots (family "ncs") or working-basis
    coefficients (family "pspline"); proxy_params holds one dict of draw
    arrays per proxy.
    """

    family: str
    knots: np.ndarray
    spline_degree: int
    curve: np.ndarray              # (draws, dim)
    smooth: np.ndarray             # (draws,)
    x: np.ndarray                  # (draws, n)
    sigma2: np.ndarray             # (draws, K)
    mu_x: np.ndarray
    sigma_x2: np.ndarray
    proxy_params: list[dict[str, np.ndarray]]
    model: ModelSpec
    accept_rates: dict[str, float]
    seed: int
    config: ChainConfig
    delta2: np.ndarray | None = None
    mixture_scales: np.ndarray | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self._ncs_basis: NcsBasis | None = None
        self._ps_basis: PsplineBasis | None = None

    @property
    def n_draws(self) -> int:
        return self.curve.shape[0]

    def _curve_design(self, points) -> np.ndarray:
        if self.family == "ncs":
            if self._ncs_basis is None:
                self._ncs_basis = NcsBasis(self.knots)
            return self._ncs_basis.design(points)
        if self._ps_basis is None:
            self._ps_basis = PsplineBasis(self.knots, self.spline_degree)
        return self._ps_basis.design(points)

    def curve_draws_at(self, points) -> np.ndarray:
        """Quantile-curve draws evaluated at the given points: (draws, m)."""
        return self.curve @ self._curve_design(points).T

    def curve_mean_at(self, points) -> np.ndarray:
        return self.curve_draws_at(points).mean(axis=0)

    def curve_band_at(self, points, lo: float = 0.025, hi: float = 0.975):
        draws = self.curve_draws_at(points)
        return np.quantile(draws, lo, axis=0), np.quantile(draws, hi, axis=0)

    def proxy_curve_draws_at(self, k: int, points) -> np.ndarray:
        """Draws of proxy k's mean function at the given points: (draws, m)."""
        spec = self.model.specs[k]
        points = np.atleast_1d(np.asarray(points, dtype=float))
        if isinstance(spec, PolynomialProxy):
            design = np.vander(points, spec.degree + 1, increasing=True)
            return self.proxy_params[k]["alpha"] @ design.T
        if isinstance(spec, SplineProxy):
            if self._ps_basis is None:
                self._ps_basis = PsplineBasis(self.knots, self.spline_degree)
            return self.proxy_params[k]["beta"] @ self._ps_basis.design(points).T
        return np.broadcast_to(points, (self.n_draws, points.shape[0])).copy()

    def x_posterior_mean(self) -> np.ndarray:
        return self.x.mean(axis=0)

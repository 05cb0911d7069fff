"""Per-proxy mean functions and their conjugate parameter updates.

Each proxy k contributes a Gaussian likelihood N(w_k | h_k(x), sigma_k^2).
The benchmark has h(x) = x with no free mean parameters; polynomial proxies
carry a coefficient vector with a normal prior; spline proxies carry
penalized-spline coefficients with a smoothing precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .dists import cholesky_with_jitter, sample_gamma, sample_inverse_gamma
from .model import BenchmarkProxy, PolynomialProxy, SplineProxy
from .splines import PsplineBasis

__all__ = [
    "BenchmarkState",
    "PolyState",
    "SplineState",
    "proxy_mean",
    "polynomial_design",
    "draw_poly_coeffs",
    "draw_spline_coeffs",
    "draw_error_variance",
    "draw_smooth_precision",
]


@dataclass
class BenchmarkState:
    sigma2: float


@dataclass
class PolyState:
    alpha: np.ndarray
    sigma2: float


@dataclass
class SplineState:
    beta: np.ndarray
    lam: float
    sigma2: float


def polynomial_design(x, degree: int) -> np.ndarray:
    """Design matrix (1, x, ..., x^degree)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.vander(x, degree + 1, increasing=True)


def proxy_mean(spec, params, x, basis: PsplineBasis | None = None):
    """Mean of one proxy at covariate value(s) x."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, BenchmarkProxy):
        return x.astype(float, copy=True)
    if isinstance(spec, PolynomialProxy):
        alpha = np.asarray(params.alpha, dtype=float)
        if alpha.shape != (spec.degree + 1,):
            raise ValueError("coefficient length does not match the declared degree")
        scalar = x.ndim == 0
        out = polynomial_design(x, spec.degree) @ alpha
        return float(out[0]) if scalar else out
    if isinstance(spec, SplineProxy):
        if basis is None:
            raise ValueError("spline proxy needs its basis")
        return basis.evaluate(np.asarray(params.beta, dtype=float), x)
    raise ValueError(f"unknown proxy spec: {spec!r}")


def _draw_gaussian(prec: np.ndarray, lin: np.ndarray, rng) -> np.ndarray:
    """Draw from N(P^{-1} b, P^{-1}) given precision P and linear term b."""
    low = cholesky_with_jitter(prec)
    mean = cho_solve((low, True), lin)
    z = rng.standard_normal(prec.shape[0])
    return mean + solve_triangular(low.T, z, lower=False)


def draw_poly_coeffs(x, w, sigma2, prior_mean, prior_cov, rng) -> np.ndarray:
    """Conjugate normal draw of polynomial coefficients.

    Posterior precision X'X/sigma2 + V^{-1}, linear term X'w/sigma2 + V^{-1} m.
    An empty update (n = 0) returns a prior draw.
    """
    prior_mean = np.asarray(prior_mean, dtype=float)
    prior_cov = np.asarray(prior_cov, dtype=float)
    prior_prec = np.linalg.inv(prior_cov)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 0:
        prec = prior_prec
        lin = prior_prec @ prior_mean
    else:
        design = polynomial_design(x, prior_mean.shape[0] - 1)
        prec = design.T @ design / sigma2 + prior_prec
        lin = design.T @ np.asarray(w, dtype=float) / sigma2 + prior_prec @ prior_mean
    return _draw_gaussian(prec, lin, rng)


def draw_spline_coeffs(design, w, sigma2, lam, penalty, rng) -> np.ndarray:
    """Conjugate draw of spline coefficients: N(V Z'w/sigma2, V), V = (lam K + Z'Z/sigma2)^{-1}."""
    penalty = np.asarray(penalty, dtype=float)
    design = np.asarray(design, dtype=float)
    if design.size == 0:
        prec = lam * penalty + 1e-8 * np.eye(penalty.shape[0])
        lin = np.zeros(penalty.shape[0])
    else:
        prec = lam * penalty + design.T @ design / sigma2
        lin = design.T @ np.asarray(w, dtype=float) / sigma2
    return _draw_gaussian(prec, lin, rng)


def draw_error_variance(residuals, shape, scale, rng) -> float:
    """Inverse-gamma draw IG(n/2 + shape, scale + rss/2)."""
    residuals = np.atleast_1d(np.asarray(residuals, dtype=float))
    n = residuals.shape[0]
    return float(
        sample_inverse_gamma(0.5 * n + shape, scale + 0.5 * float(residuals @ residuals), rng)
    )


def draw_smooth_precision(quad_form, rank, shape, rate, rng) -> float:
    """Gamma draw GA(shape + rank/2, rate + quad_form/2) for a smoothing precision."""
    if quad_form < 0:
        quad_form = 0.0
    return float(sample_gamma(shape + 0.5 * rank, rate + 0.5 * quad_form, rng))

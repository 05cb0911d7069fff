"""Seeded sampling primitives for the Gibbs updates.

Every chain owns a Generator created through make_rng, so replicate streams
are independent and reproducible bit-for-bit.  The samplers here draw only
through that Generator; the test suite checks them against scipy's analytic
distributions, so none of the draw paths go through scipy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "make_rng",
    "sample_gamma",
    "sample_inverse_gamma",
    "sample_inverse_gaussian",
    "sample_mvn_cov",
    "sample_mvn_prec",
    "cholesky_with_jitter",
]

_MAX_REL_JITTER = 1e-6


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream...); streams never overlap."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(s) for s in stream)))


def sample_gamma(shape, rate, rng, size=None):
    """Gamma draw(s) with shape/rate parameterization (mean shape/rate)."""
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(rate) <= 0):
        raise ValueError("gamma shape and rate must be positive")
    return rng.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_inverse_gamma(shape, scale, rng, size=None):
    """Inverse-gamma draw(s): density ∝ v^{-shape-1} exp(-scale/v)."""
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(scale) <= 0):
        raise ValueError("inverse-gamma shape and scale must be positive")
    return np.asarray(scale, dtype=float) / rng.gamma(shape, 1.0, size=size)


def sample_inverse_gaussian(mean, shape, rng, size=None):
    """Inverse-Gaussian draw(s) via the Michael-Schucany-Haas transform.

    mean m > 0 and shape s > 0 give moments E = m, Var = m^3 / s.
    """
    m = np.asarray(mean, dtype=float)
    s = np.asarray(shape, dtype=float)
    if np.any(m <= 0) or np.any(s <= 0):
        raise ValueError("inverse-Gaussian mean and shape must be positive")
    if size is None:
        size = np.broadcast_shapes(m.shape, s.shape)
    nu = rng.standard_normal(size)
    y = nu * nu
    root = m + m * m * y / (2.0 * s) - m / (2.0 * s) * np.sqrt(4.0 * m * s * y + (m * y) ** 2)
    # guard tiny negative roots from cancellation
    root = np.maximum(root, np.finfo(float).tiny)
    u = rng.uniform(size=size)
    other = m * m / root
    out = np.where(u <= m / (m + root), root, other)
    return float(out) if np.ndim(out) == 0 else out


def cholesky_with_jitter(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating a diagonal jitter if needed.

    The jitter starts at 1e-12 of the mean diagonal and grows tenfold up to
    1e-6 of the mean diagonal before giving up.
    """
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    base = float(np.trace(mat)) / mat.shape[0]
    if not np.isfinite(base) or base <= 0:
        base = 1.0
    eps = 1e-12 * base
    eye = np.eye(mat.shape[0])
    while eps <= _MAX_REL_JITTER * base:
        try:
            return np.linalg.cholesky(mat + eps * eye)
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise np.linalg.LinAlgError("matrix not positive definite within jitter budget")


def sample_mvn_cov(mean: np.ndarray, cov: np.ndarray, rng) -> np.ndarray:
    """Multivariate normal draw from mean and covariance."""
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-8 * max(1.0, float(np.abs(cov).max()))):
        raise ValueError("covariance must be symmetric")
    low = cholesky_with_jitter(cov)
    return np.asarray(mean, dtype=float) + low @ rng.standard_normal(low.shape[0])


def sample_mvn_prec(mean: np.ndarray, prec: np.ndarray, rng) -> np.ndarray:
    """Multivariate normal draw from mean and precision matrix."""
    prec = np.asarray(prec, dtype=float)
    if not np.allclose(prec, prec.T, rtol=0.0, atol=1e-8 * max(1.0, float(np.abs(prec).max()))):
        raise ValueError("precision must be symmetric")
    low = cholesky_with_jitter(prec)
    z = rng.standard_normal(low.shape[0])
    return np.asarray(mean, dtype=float) + solve_triangular(low.T, z, lower=False)

"""Check loss and the asymmetric-Laplace working likelihood.

The mixture engine uses the location-scale normal representation
y | s ~ N(fit + A s, B s / d2) with s ~ Exp(rate d2): integrating s out gives
the asymmetric-Laplace density d2 * p * (1-p) * exp(-d2 * rho_p(y - fit)).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["check_loss", "quantile_loglik", "mixture_coeffs", "ald_logpdf"]


def check_loss(u, p: float):
    """Piecewise-linear quantile loss u * (p - 1{u < 0})."""
    u = np.asarray(u, dtype=float)
    out = u * (p - (u < 0.0))
    return float(out) if out.ndim == 0 else out


def quantile_loglik(y: np.ndarray, fitted: np.ndarray, p: float) -> float:
    """Log of the working likelihood p^n (1-p)^n exp(-sum of check losses)."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if y.shape != fitted.shape:
        raise ValueError("length mismatch between outcome and fitted values")
    n = y.shape[0]
    return n * math.log(p) + n * math.log1p(-p) - float(np.sum(check_loss(y - fitted, p)))


def mixture_coeffs(p: float) -> tuple[float, float]:
    """Location and scale coefficients (A, B) of the exponential scale mixture."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level out of range")
    pq = p * (1.0 - p)
    return (1.0 - 2.0 * p) / pq, 2.0 / pq


def ald_logpdf(resid, p: float, rate: float = 1.0):
    """Log density of the asymmetric Laplace law with precision-like rate."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    resid = np.asarray(resid, dtype=float)
    out = math.log(rate * p * (1.0 - p)) - rate * check_loss(resid, p)
    return float(out) if np.ndim(out) == 0 else out

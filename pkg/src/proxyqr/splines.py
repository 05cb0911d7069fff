"""Spline machinery: knot grids, natural cubic splines, truncated-power splines.

The natural cubic spline is parameterized by its values at the knots.  With
knots t_1 < ... < t_N and gaps h_i = t_{i+1} - t_i, the interior second
derivatives m solve the tridiagonal system R m = Q^T v, where

    Q[j-1, j] = 1/h_{j-1},  Q[j, j] = -1/h_{j-1} - 1/h_j,  Q[j+1, j] = 1/h_j
    R[j, j]   = (h_{j-1} + h_j)/3,  R[j, j+1] = R[j+1, j] = h_j/6

(j indexing interior knots).  The roughness matrix is K = Q R^{-1} Q^T, and
v^T K v equals the integrated squared second derivative of the interpolant.
Outside the boundary knots the curve continues linearly (zero curvature).

The truncated-power family uses the basis
(1, x, ..., x^l, (x-t_1)^l_+, ..., (x-t_N)^l_+) with a first-order difference
penalty on the coefficient vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import BSpline, PPoly
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "build_knot_grid",
    "PenaltyMatrix",
    "NcsBasis",
    "NcsCurve",
    "ncs_penalty_matrix",
    "tpower_basis",
    "tpower_dim",
    "tpower_penalty",
    "PsplineBasis",
    "PsplineCurve",
]


def build_knot_grid(lo: float, hi: float, n_knots: int) -> np.ndarray:
    """Evenly spaced knots from lo to hi inclusive."""
    if not np.isfinite(lo) or not np.isfinite(hi) or lo >= hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if n_knots < 4:
        raise ValueError("need at least 4 knots")
    return np.linspace(lo, hi, n_knots)


@dataclass(frozen=True)
class PenaltyMatrix:
    """Dense symmetric positive-semidefinite quadratic-form matrix."""

    mat: np.ndarray
    rank: int

    def quad(self, v: np.ndarray) -> float:
        return float(v @ self.mat @ v)


class NcsBasis:
    """Per-grid precomputation for natural-cubic-spline interpolation.

    Immutable after construction; evaluation is pure, so one instance can be
    shared by every chain using the same grid.
    """

    def __init__(self, knots: np.ndarray):
        knots = np.ascontiguousarray(knots, dtype=float)
        if knots.ndim != 1 or knots.shape[0] < 4:
            raise ValueError("need at least 4 knots")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        self.knots = knots
        self.n_knots = n = knots.shape[0]
        h = np.diff(knots)
        self.gaps = h

        q = np.zeros((n, n - 2))
        j = np.arange(1, n - 1)
        q[j - 1, j - 1] = 1.0 / h[j - 1]
        q[j, j - 1] = -1.0 / h[j - 1] - 1.0 / h[j]
        q[j + 1, j - 1] = 1.0 / h[j]
        r = np.zeros((n - 2, n - 2))
        r[np.arange(n - 2), np.arange(n - 2)] = (h[:-1] + h[1:]) / 3.0
        off = h[1:-1] / 6.0
        r[np.arange(n - 3), np.arange(1, n - 2)] = off
        r[np.arange(1, n - 2), np.arange(n - 3)] = off

        self._q = q
        self._r = r
        # interior second derivatives are curv_op @ values
        self.curv_op = cho_solve(cho_factor(r), q.T)
        k = q @ self.curv_op
        self.penalty = PenaltyMatrix(mat=(k + k.T) / 2.0, rank=n - 2)

    def second_derivs(self, values: np.ndarray) -> np.ndarray:
        """Second derivatives at all knots (zero at the boundary knots)."""
        m = np.zeros(self.n_knots)
        m[1:-1] = self.curv_op @ values
        return m

    def evaluate(self, values, x, second=None):
        """Interpolate at x; linear continuation beyond the boundary knots."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if not np.isfinite(x).all():
            raise ValueError("evaluation points must be finite")
        if second is None:
            second = self.second_derivs(values)
        t = self.knots
        h = self.gaps
        idx = np.clip(np.searchsorted(t, x, side="right") - 1, 0, self.n_knots - 2)
        hi = h[idx]
        a = t[idx + 1] - x
        b = x - t[idx]
        out = (values[idx] * a + values[idx + 1] * b) / hi - a * b * (
            (1.0 + a / hi) * second[idx] + (1.0 + b / hi) * second[idx + 1]
        ) / 6.0
        left = x < t[0]
        if left.any():
            slope = (values[1] - values[0]) / h[0] - second[1] * h[0] / 6.0
            out[left] = values[0] + slope * (x[left] - t[0])
        right = x > t[-1]
        if right.any():
            slope = (values[-1] - values[-2]) / h[-1] + second[-2] * h[-1] / 6.0
            out[right] = values[-1] + slope * (x[right] - t[-1])
        return out[0] if scalar else out

    def design(self, x) -> np.ndarray:
        """Matrix A with A @ values = evaluate(values, x); evaluation is linear."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.isfinite(x).all():
            raise ValueError("evaluation points must be finite")
        n = self.n_knots
        m = x.shape[0]
        t = self.knots
        h = self.gaps
        rows = np.arange(m)
        direct = np.zeros((m, n))
        curv = np.zeros((m, n))  # coefficients on second derivatives at knots

        idx = np.clip(np.searchsorted(t, x, side="right") - 1, 0, n - 2)
        hi = h[idx]
        a = t[idx + 1] - x
        b = x - t[idx]
        inside = (x >= t[0]) & (x <= t[-1])
        wa = np.where(inside, a / hi, 0.0)
        wb = np.where(inside, b / hi, 0.0)
        ca = np.where(inside, -a * b * (1.0 + a / hi) / 6.0, 0.0)
        cb = np.where(inside, -a * b * (1.0 + b / hi) / 6.0, 0.0)
        np.add.at(direct, (rows, idx), wa)
        np.add.at(direct, (rows, idx + 1), wb)
        np.add.at(curv, (rows, idx), ca)
        np.add.at(curv, (rows, idx + 1), cb)

        left = x < t[0]
        if left.any():
            d = x[left] - t[0]
            direct[left, 0] = 1.0 - d / h[0]
            direct[left, 1] = d / h[0]
            curv[left, 1] = -d * h[0] / 6.0
        right = x > t[-1]
        if right.any():
            d = x[right] - t[-1]
            direct[right, n - 1] = 1.0 + d / h[-1]
            direct[right, n - 2] = -d / h[-1]
            curv[right, n - 2] = d * h[-1] / 6.0

        return direct + curv[:, 1:-1] @ self.curv_op


def ncs_penalty_matrix(knots: np.ndarray) -> PenaltyMatrix:
    """Roughness matrix K with v^T K v = integrated squared second derivative."""
    return NcsBasis(knots).penalty


class NcsCurve:
    """Natural cubic spline bound to values at its knots."""

    def __init__(self, basis: NcsBasis | np.ndarray, values: np.ndarray):
        if not isinstance(basis, NcsBasis):
            basis = NcsBasis(basis)
        values = np.ascontiguousarray(values, dtype=float)
        if values.shape != (basis.n_knots,):
            raise ValueError("values must match the knot count")
        self.basis = basis
        self.values = values
        self.second = basis.second_derivs(values)

    def __call__(self, x):
        return self.basis.evaluate(self.values, x, self.second)

    def roughness(self) -> float:
        return self.basis.penalty.quad(self.values)


def tpower_dim(n_knots: int, degree: int) -> int:
    return n_knots + degree + 1


def tpower_basis(knots: np.ndarray, degree: int, x) -> np.ndarray:
    """Truncated-power basis (1, x, ..., x^l, (x-t_1)^l_+, ..., (x-t_N)^l_+).

    Returns one row per evaluation point (a plain vector for scalar x).
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    knots = np.asarray(knots, dtype=float)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if not np.isfinite(x).all():
        raise ValueError("evaluation points must be finite")
    cols = [np.ones_like(x)]
    for j in range(1, degree + 1):
        cols.append(cols[-1] * x)
    trunc = np.maximum(x[:, None] - knots[None, :], 0.0) ** degree
    z = np.column_stack(cols + [trunc])
    return z[0] if scalar else z


def tpower_penalty(n_knots: int, degree: int) -> PenaltyMatrix:
    """First-order difference penalty on the coefficient vector."""
    m = tpower_dim(n_knots, degree)
    d = np.diff(np.eye(m), axis=0)
    return PenaltyMatrix(mat=d.T @ d, rank=m - 1)


class PsplineBasis:
    """Working basis for the penalized-spline curves in the samplers.

    Spans the same piecewise-polynomial space as the truncated-power basis on
    the given knots, but is parameterized through local B-splines so the
    normal-equation solves stay well conditioned (the truncated-power Gram is
    numerically singular beyond ~20 knots).  Coefficient count is
    n_knots + degree + 1, the first-difference penalty has rank
    n_knots + degree, and a constant coefficient vector is a constant curve.
    Coefficients convert exactly to truncated-power form via to_tpower.
    """

    def __init__(self, knots: np.ndarray, degree: int = 3):
        knots = np.ascontiguousarray(knots, dtype=float)
        if knots.ndim != 1 or knots.shape[0] < 2:
            raise ValueError("need at least 2 knots")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.knots = knots
        self.degree = degree
        pad = float(np.mean(np.diff(knots)))
        lo, hi = knots[0] - pad, knots[-1] + pad
        self._t = np.concatenate(
            [np.full(degree + 1, lo), knots, np.full(degree + 1, hi)]
        )
        self.dim = self._t.shape[0] - degree - 1
        d = np.diff(np.eye(self.dim), axis=0)
        self.penalty = PenaltyMatrix(mat=d.T @ d, rank=self.dim - 1)

    def design(self, x) -> np.ndarray:
        """Dense design matrix; polynomial continuation outside the domain."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.isfinite(x).all():
            raise ValueError("evaluation points must be finite")
        return BSpline.design_matrix(x, self._t, self.degree, extrapolate=True).toarray()

    def evaluate(self, coef: np.ndarray, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        out = self.design(np.atleast_1d(x)) @ coef
        return float(out[0]) if scalar else out

    def to_tpower(self, coef: np.ndarray) -> np.ndarray:
        """Exact truncated-power coefficients of the same curve."""
        pp = PPoly.from_spline(BSpline(self._t, np.asarray(coef, dtype=float), self.degree))
        i = max(int(np.searchsorted(pp.x, self.knots[0], side="left")) - 1, 0)
        local = pp.c[:, i][::-1]
        a = pp.x[i]
        poly = Polynomial([0.0])
        for j, cj in enumerate(local):
            poly = poly + cj * Polynomial([-a, 1.0]) ** j
        head = np.zeros(self.degree + 1)
        head[: len(poly.coef)] = poly.coef[: self.degree + 1]
        dpp = pp.derivative(self.degree)
        eps = 1e-7 * max(1.0, float(np.abs(self.knots).max()))
        fact = math.factorial(self.degree)
        jumps = [(float(dpp(tau + eps)) - float(dpp(tau - eps))) / fact for tau in self.knots]
        return np.concatenate([head, jumps])


class PsplineCurve:
    """Penalized spline bound to its working-basis coefficients."""

    def __init__(self, basis: PsplineBasis, coef: np.ndarray):
        coef = np.ascontiguousarray(coef, dtype=float)
        if coef.shape != (basis.dim,):
            raise ValueError("coefficient length must match the basis dimension")
        self.basis = basis
        self.coef = coef

    def __call__(self, x):
        return self.basis.evaluate(self.coef, x)

    @property
    def tpower_coefs(self) -> np.ndarray:
        return self.basis.to_tpower(self.coef)

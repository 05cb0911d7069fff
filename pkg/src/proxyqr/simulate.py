"""Synthetic benchmark regimes: two mean structures, three error laws, three proxies.

Regime 1 is homoscedastic, regime 2 multiplies the error by 1.5x so the
conditional quantiles fan out with |x|.  The covariate is uniform on [-5, 5]
(the affine image of a uniform draw on the unit interval).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaincinv, ndtri

from .dists import make_rng

__all__ = [
    "ERRORS",
    "SimDataset",
    "mean_curve",
    "error_quantile",
    "true_quantile",
    "proxy_curves",
    "gen_proxies",
    "gen_dataset",
    "save_dataset",
    "load_dataset",
]

ERRORS = ("normal", "t", "gamma")
X_RANGE = (-5.0, 5.0)

_DATA_STREAM = 1000  # stream ids so dataset draws never collide with chain draws


@dataclass(frozen=True)
class SimDataset:
    """One simulated replicate with its generator metadata."""

    y: np.ndarray
    x: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    dataset: int
    error: str
    seed: int

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def proxy(self, k: int) -> np.ndarray:
        return (self.w1, self.w2, self.w3)[k - 1]


def mean_curve(dataset: int, x):
    """Noise-free location curve of the outcome."""
    x = np.asarray(x, dtype=float)
    if dataset == 1:
        return 0.4 * x + 0.5 * np.sin(2.7 * x) + 1.1 / (1.0 + x * x)
    if dataset == 2:
        return np.sin(2.0 * (4.0 * x - 2.0)) + 2.0 * np.exp(-256.0 * (x - 0.5) ** 2)
    raise ValueError(f"unknown dataset regime: {dataset}")


def error_quantile(error: str, p: float) -> float:
    """Quantile of the error law: standard normal, t with 2 df, or gamma(4, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level out of range")
    if error == "normal":
        return float(ndtri(p))
    if error == "t":
        return (2.0 * p - 1.0) / np.sqrt(2.0 * p * (1.0 - p))
    if error == "gamma":
        return float(gammaincinv(4.0, p))
    raise ValueError(f"unknown error law: {error}")


def noise_scale(dataset: int, x):
    """Multiplier on the error draw (1 for regime 1, 1.5x for regime 2)."""
    x = np.asarray(x, dtype=float)
    if dataset == 1:
        return np.ones_like(x)
    if dataset == 2:
        return 1.5 * x
    raise ValueError(f"unknown dataset regime: {dataset}")


def true_quantile(dataset: int, error: str, p: float, x):
    """Conditional p-quantile of the generated outcome at x.

    Where the noise multiplier is negative the quantile uses the mirrored
    level 1-p; otherwise this is mean + multiplier * error_quantile(p).
    """
    x = np.asarray(x, dtype=float)
    scale = noise_scale(dataset, x)
    q_hi = error_quantile(error, p)
    q_lo = error_quantile(error, 1.0 - p)
    out = mean_curve(dataset, x) + scale * np.where(scale >= 0.0, q_hi, q_lo)
    return float(out) if np.ndim(x) == 0 else out


def proxy_curves(x):
    """Noise-free proxy means (identity, quadratic, damped oscillation)."""
    x = np.asarray(x, dtype=float)
    t = x + 0.1
    safe = np.where(np.abs(t) < 1e-12, 1.0, t)
    w3 = np.where(np.abs(t) < 1e-12, 12.0, np.sin(12.0 * t) / safe)
    return x, 3.0 + 0.25 * x + 0.75 * x * x, w3


def gen_proxies(x_true: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three proxies of x_true with unit-variance normal measurement error."""
    x_true = np.asarray(x_true, dtype=float)
    if not np.isfinite(x_true).all():
        raise ValueError("x_true must be finite")
    rng = make_rng(seed, _DATA_STREAM + 1)
    h1, h2, h3 = proxy_curves(x_true)
    n = x_true.shape[0]
    return (
        h1 + rng.standard_normal(n),
        h2 + rng.standard_normal(n),
        h3 + rng.standard_normal(n),
    )


def gen_dataset(dataset: int, error: str, n: int, seed: int) -> SimDataset:
    """Generate one replicate; identical (dataset, error, n, seed) reproduce bitwise."""
    if n < 1:
        raise ValueError("need n >= 1")
    if error not in ERRORS:
        raise ValueError(f"unknown error law: {error}")
    if dataset not in (1, 2):
        raise ValueError(f"unknown dataset regime: {dataset}")
    rng = make_rng(seed, _DATA_STREAM)
    x = rng.uniform(X_RANGE[0], X_RANGE[1], n)
    if error == "normal":
        e = rng.standard_normal(n)
    elif error == "t":
        e = rng.standard_t(2.0, n)
    else:
        e = rng.gamma(4.0, 1.0, n)
    y = mean_curve(dataset, x) + noise_scale(dataset, x) * e
    w1, w2, w3 = gen_proxies(x, seed)
    return SimDataset(y=y, x=x, w1=w1, w2=w2, w3=w3, dataset=dataset, error=error, seed=seed)


def save_dataset(ds: SimDataset, path) -> Path:
    """Write the replicate as CSV plus a JSON sidecar with its metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "x_true", "w1", "w2", "w3"])
        for row in zip(ds.y, ds.x, ds.w1, ds.w2, ds.w3):
            writer.writerow([f"{v:.17g}" for v in row])
    sidecar = path.with_suffix(".json")
    with open(sidecar, "w") as fh:
        json.dump(
            {"dataset": ds.dataset, "error": ds.error, "n": ds.n, "seed": ds.seed},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return path


def load_dataset(path) -> SimDataset:
    """Read a replicate written by save_dataset (sidecar optional)."""
    path = Path(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = {"dataset": 0, "error": "unknown", "seed": -1}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta.update(json.loads(sidecar.read_text()))
    return SimDataset(
        y=np.ascontiguousarray(data["y"]),
        x=np.ascontiguousarray(data["x_true"]),
        w1=np.ascontiguousarray(data["w1"]),
        w2=np.ascontiguousarray(data["w2"]),
        w3=np.ascontiguousarray(data["w3"]),
        dataset=int(meta["dataset"]),
        error=str(meta["error"]),
        seed=int(meta["seed"]),
    )

"""Centering and sphering of observations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NonFinite, RankDeficient

EIGEN_FLOOR = 1e-10


def as_dataset(data, min_rows=None):
    """Validate an (n, d) array of observations and return it as floats."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array of observations, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("observations contain NaN or infinite values")
    if min_rows is not None and X.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} observations, got {X.shape[0]}")
    return X


@dataclass(frozen=True)
class WhiteningTransform:
    mean: np.ndarray
    sigma: np.ndarray
    inv_sqrt: np.ndarray

    @property
    def dim(self):
        return self.mean.size

    def log_det_sigma(self):
        return float(np.linalg.slogdet(self.sigma)[1])

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "sigma": self.sigma.tolist(),
            "inv_sqrt": self.inv_sqrt.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            np.asarray(data["mean"], dtype=float),
            np.asarray(data["sigma"], dtype=float),
            np.asarray(data["inv_sqrt"], dtype=float),
        )


def fit_whitener(data):
    """Sample mean, covariance (divisor n) and its inverse symmetric root.

    Raises RankDeficient when the smallest covariance eigenvalue is below
    ``EIGEN_FLOOR`` times the largest, i.e. the observations lie (nearly)
    on a hyperplane.
    """
    X = as_dataset(data)
    n, d = X.shape
    if n < d + 1:
        raise RankDeficient(f"need n >= d + 1 observations, got n={n}, d={d}")
    mean = X.mean(axis=0)
    Xc = X - mean
    sigma = Xc.T @ Xc / n
    sigma = 0.5 * (sigma + sigma.T)
    evals, evecs = np.linalg.eigh(sigma)
    if evals[-1] <= 0 or evals[0] < EIGEN_FLOOR * evals[-1]:
        raise RankDeficient(
            "sample covariance is singular: data are concentrated on a hyperplane"
        )
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    inv_sqrt = 0.5 * (inv_sqrt + inv_sqrt.T)
    return WhiteningTransform(mean, sigma, inv_sqrt)


def whiten(t, data):
    """Map x_i to inv_sqrt @ (x_i - mean)."""
    X = as_dataset(data)
    if X.shape[1] != t.dim:
        raise ValueError("dimension mismatch between transform and data")
    return (X - t.mean) @ t.inv_sqrt.T


def unwhiten(t, Z):
    """Inverse of :func:`whiten`."""
    evals, evecs = np.linalg.eigh(t.sigma)
    sqrt = (evecs * np.sqrt(evals)) @ evecs.T
    return np.asarray(Z, dtype=float) @ sqrt.T + t.mean


def unwhiten_unmixer(t, O):
    """Unmixing matrix O @ inv_sqrt in the original coordinates."""
    O = np.asarray(O, dtype=float)
    if not np.allclose(O @ O.T, np.eye(O.shape[0]), atol=1e-8):
        raise ValueError("O must be orthogonal")
    return O @ t.inv_sqrt

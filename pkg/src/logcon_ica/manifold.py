"""Ascent on SO(d) along coordinate geodesics.

With the marginal log-densities held fixed, each written as a minimum of
lines ``min_k (b_jk * y - beta_jk)``, the objective over rotations is

    g(W) = (1/n) sum_i sum_j min_k (b_jk * w_j . x_i - beta_jk).

Moves are made along ``W exp(eps * Y)`` where ``Y`` is one of the signed
basis matrices of the skew-symmetric matrices, chosen by its one-sided
directional derivative, with the step set by backtracking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .exceptions import StallAtStationary

ALPHA = 0.3
GAMMA = 0.5
EPS_MIN = 1e-12
KINK_RTOL = 1e-12
ORTHO_DRIFT = 1e-10


@dataclass(frozen=True)
class SkewDirection:
    """Signed basis element: +-(E_rs - E_sr)/sqrt(2), zero-based r > s."""

    r: int
    s: int
    sign: int
    d: int

    def __post_init__(self):
        if not 0 <= self.s < self.r < self.d:
            raise ValueError("need 0 <= s < r < d")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def matrix(self):
        Y = np.zeros((self.d, self.d))
        Y[self.r, self.s] = self.sign / math.sqrt(2.0)
        Y[self.s, self.r] = -self.sign / math.sqrt(2.0)
        return Y


def basis_directions(d):
    """All d(d-1) signed basis directions in lexicographic (r, s, sign) order."""
    return [
        SkewDirection(r, s, sign, d)
        for s, r in sorted(combinations(range(d), 2), key=lambda p: (p[1], p[0]))
        for sign in (-1, 1)
    ]


def _as_matrix(Y):
    return Y.matrix if isinstance(Y, SkewDirection) else np.asarray(Y, dtype=float)


def haar_orthogonal(d, rng):
    """Haar-distributed rotation in SO(d) via QR of a Gaussian matrix."""
    if d < 1:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(rng)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[0] = -Q[0]
    return Q


def matrix_exp(Y):
    """exp(Y) for skew-symmetric Y."""
    Y = np.asarray(Y, dtype=float)
    if np.abs(Y + Y.T).max(initial=0.0) > 1e-12:
        raise ValueError("Y must be skew-symmetric")
    if Y.shape == (2, 2):
        theta = Y[0, 1]
        c, s = math.cos(theta), math.sin(theta)
        return np.array([[c, s], [-s, c]])
    return scipy.linalg.expm(Y)


def reorthogonalize(W):
    """Snap W back onto SO(d) if rounding has moved it off."""
    d = W.shape[0]
    if np.abs(W @ W.T - np.eye(d)).max() <= ORTHO_DRIFT:
        return W
    Q, R = np.linalg.qr(W.T)
    return (Q * np.sign(np.diag(R))).T


@dataclass(frozen=True)
class PiecewiseLogLik:
    """Marginal log-densities as line minima, together with the data.

    ``slopes[j]`` is strictly decreasing and ``intercepts[j]`` holds the
    matching beta values, so the log-density of coordinate j at y is
    ``min(slopes[j] * y - intercepts[j])``.
    """

    slopes: tuple
    intercepts: tuple
    data: np.ndarray

    @classmethod
    def from_densities(cls, densities, data):
        return cls(
            tuple(np.asarray(f.slopes) for f in densities),
            tuple(np.asarray(f.intercepts) for f in densities),
            np.asarray(data, dtype=float),
        )

    @property
    def n(self):
        return self.data.shape[0]

    def _lines(self, j, y):
        return y[:, None] * self.slopes[j] - self.intercepts[j]

    def _minimum(self, j, y):
        b, beta = self.slopes[j], self.intercepts[j]
        db = np.diff(b)
        if b.size == 1 or np.any(db >= 0):
            return self._lines(j, y).min(axis=1)
        # lines k and k+1 cross at an increasing sequence of points
        cross = np.diff(beta) / db
        k = np.searchsorted(cross, y)
        return b[k] * y - beta[k]

    def value(self, W):
        """g(W): mean over observations of the summed line minima."""
        Y = self.data @ np.asarray(W).T
        total = 0.0
        for j in range(Y.shape[1]):
            total += self._minimum(j, Y[:, j]).sum()
        return total / self.n

    def __call__(self, W):
        return self.value(W)

    def active_slopes(self, W):
        """Slopes of the active pieces at W as (smaller, larger) arrays.

        When a projection sits on a kink (two pieces attain the minimum) the
        two entries differ; otherwise they coincide.
        """
        Y = self.data @ np.asarray(W).T
        lo = np.empty_like(Y)
        hi = np.empty_like(Y)
        for j in range(Y.shape[1]):
            b = self.slopes[j]
            lines = self._lines(j, Y[:, j])
            if b.size == 1:
                lo[:, j] = hi[:, j] = b[0]
                continue
            order = np.argsort(lines, axis=1, kind="stable")[:, :2]
            rows = np.arange(lines.shape[0])
            v1 = lines[rows, order[:, 0]]
            v2 = lines[rows, order[:, 1]]
            kink = (v2 - v1) < KINK_RTOL * (1.0 + np.abs(v1))
            b1 = b[order[:, 0]]
            b2 = np.where(kink, b[order[:, 1]], b1)
            lo[:, j] = np.minimum(b1, b2)
            hi[:, j] = np.maximum(b1, b2)
        return lo, hi


def _derivative(active, data, W, Y):
    lo, hi = active
    proj = data @ (W @ Y).T
    b = np.where(proj >= 0, lo, hi)
    return float((b * proj).sum() / data.shape[0])


def directional_derivative(L, W, Y):
    """One-sided derivative of g at W along the geodesic W exp(tY).

    At a kink the right-hand piece (smaller slope) is used when the
    projection moves up and the left-hand piece when it moves down.
    """
    W = np.asarray(W, dtype=float)
    return _derivative(L.active_slopes(W), L.data, W, _as_matrix(Y))


def best_direction(L, W):
    """Signed basis direction with the largest one-sided derivative.

    Ties keep the first candidate in :func:`basis_directions` order.
    """
    W = np.asarray(W, dtype=float)
    active = L.active_slopes(W)
    best, best_val = None, -np.inf
    for Y in basis_directions(W.shape[0]):
        val = _derivative(active, L.data, W, Y.matrix)
        if val > best_val:
            best, best_val = Y, val
    return best, best_val


def line_search(g, W, Y, deriv, alpha=ALPHA, gamma=GAMMA, eps_min=EPS_MIN):
    """Backtracking along W exp(eps Y) from eps = 1.

    Accepts the first eps with g(W exp(eps Y)) > g(W) + alpha * eps * deriv.
    Returns ``(W_new, eps)``.
    """
    if not deriv > 0:
        raise ValueError("line search needs a positive directional derivative")
    if not (0 < alpha < 1 and 0 < gamma < 1):
        raise ValueError("alpha and gamma must lie in (0, 1)")
    W = np.asarray(W, dtype=float)
    Ym = _as_matrix(Y)
    g0 = g(W)
    eps = 1.0
    while eps >= eps_min:
        cand = reorthogonalize(W @ matrix_exp(eps * Ym))
        if g(cand) > g0 + alpha * eps * deriv:
            return cand, eps
        eps *= gamma
    raise StallAtStationary(f"no ascent along direction before eps < {eps_min:g}")

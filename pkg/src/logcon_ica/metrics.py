"""Evaluation of fitted models against a known truth."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .exceptions import SingularMatrix
from .lcmle import LogConcaveDensity, segment_mass


def amari(A, B):
    """Amari metric between A and B through C = A B^{-1}.

    Zero exactly when C is a scaled permutation matrix.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of the same size")
    if np.linalg.cond(B) > 1e14:
        raise SingularMatrix("B is singular")
    C = np.abs(A @ np.linalg.inv(B))
    d = C.shape[0]
    row_max = C.max(axis=1)
    col_max = C.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise ValueError("A B^{-1} has a zero row or column")
    rows = np.sum(C.sum(axis=1) / row_max - 1.0)
    cols = np.sum(C.sum(axis=0) / col_max - 1.0)
    return float((rows + cols) / (2 * d))


def _piece_abs_integral(a, b, fa, fb, ga, gb):
    """Integral of |exp(lf) - exp(lg)| over [a, b] with both logs linear.

    ``None`` endpoints mean the density is zero on the cell.
    """
    width = b - a
    if fa is None and ga is None:
        return 0.0
    if ga is None:
        return width * float(segment_mass(fa, fb))
    if fa is None:
        return width * float(segment_mass(ga, gb))
    ha, hb = fa - ga, fb - gb
    if ha * hb >= 0:
        return abs(width * float(segment_mass(fa, fb) - segment_mass(ga, gb)))
    r = ha / (ha - hb)
    fr = fa + r * (fb - fa)
    gr = ga + r * (gb - ga)
    left = r * width * float(segment_mass(fa, fr) - segment_mass(ga, gr))
    right = (1 - r) * width * float(segment_mass(fr, fb) - segment_mass(gr, gb))
    return abs(left) + abs(right)


def _tv_log_concave(f, g):
    grid = np.union1d(f.knots, g.knots)
    total = 0.0
    fl, fh = f.support
    gl, gh = g.support
    for a, b in zip(grid[:-1], grid[1:]):
        in_f = fl <= a and b <= fh
        in_g = gl <= a and b <= gh
        fa, fb = (f.log_pdf(a), f.log_pdf(b)) if in_f else (None, None)
        ga, gb = (g.log_pdf(a), g.log_pdf(b)) if in_g else (None, None)
        total += _piece_abs_integral(a, b, fa, fb, ga, gb)
    return 0.5 * total


def _tv_general(f, g, points_per_piece=64):
    pdf = g.pdf if hasattr(g, "pdf") else g
    cdf = getattr(g, "cdf", None)

    def mass(a, b):
        if cdf is not None:
            return float(cdf(b) - cdf(a))
        return integrate.quad(pdf, a, b, epsabs=1e-10, limit=200)[0]

    def diff(x):
        return f.pdf(x) - pdf(x)

    lo, hi = f.support
    breaks = set(f.knots.tolist())
    if hasattr(g, "support"):
        for edge in np.atleast_1d(g.support()):
            if np.isfinite(edge) and lo < edge < hi:
                breaks.add(float(edge))
    breaks = np.array(sorted(breaks))
    inside = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        # bracket sign changes of f - g on a grid, refine by root finding
        xs = np.linspace(a, b, points_per_piece + 1)
        vals = diff(xs)
        cuts = [a]
        for k in np.flatnonzero(vals[:-1] * vals[1:] < 0):
            cuts.append(optimize.brentq(diff, xs[k], xs[k + 1], xtol=1e-14))
        cuts.append(b)
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            if c1 > c0:
                inside += abs(f.integrate(c0, c1) - mass(c0, c1))
    if cdf is not None:
        outside = 1.0 - float(cdf(hi) - cdf(lo))
    else:
        outside = (
            integrate.quad(pdf, -np.inf, lo, epsabs=1e-10, limit=200)[0]
            + integrate.quad(pdf, hi, np.inf, epsabs=1e-10, limit=200)[0]
        )
    return 0.5 * (inside + max(outside, 0.0))


def tv_distance(f, g):
    """Total variation distance between a log-concave fit and ``g``.

    ``g`` may be another LogConcaveDensity (computed exactly), a frozen
    scipy.stats distribution, or any callable density.
    """
    if isinstance(g, LogConcaveDensity):
        return _tv_log_concave(f, g)
    return _tv_general(f, g)


@dataclass(frozen=True)
class Alignment:
    pi: tuple
    eps: np.ndarray
    row_errors: np.ndarray
    tv_errors: np.ndarray

    def to_dict(self):
        return {
            "pi": list(self.pi),
            "eps": self.eps.tolist(),
            "row_errors": self.row_errors.tolist(),
            "tv_errors": [None if math.isnan(v) else v for v in self.tv_errors],
        }


def _row_fit(w_hat, w):
    """Least-squares u = 1/eps minimising ||u * w_hat - w||."""
    u = float(w_hat @ w) / float(w_hat @ w_hat)
    if u == 0.0:
        u = np.finfo(float).tiny
    return 1.0 / u, float(np.linalg.norm(u * w_hat - w))


def align(fitted, truth_W, truth_densities=None):
    """Match fitted rows to true rows up to permutation and scaling.

    ``pi[j]`` is the fitted row matched to true row j and ``eps[j]`` its
    scale, so that ``W_hat[pi[j]] / eps[j]`` approximates ``truth_W[j]``.
    """
    W_hat = np.asarray(getattr(fitted, "W", fitted), dtype=float)
    W = np.asarray(truth_W, dtype=float)
    d = W.shape[0]
    if d > 8:
        raise ValueError("exhaustive alignment supports d <= 8")
    best = None
    for perm in itertools.permutations(range(d)):
        fits = [_row_fit(W_hat[perm[j]], W[j]) for j in range(d)]
        cost = sum(err for _, err in fits)
        if best is None or cost < best[0]:
            best = (cost, perm, fits)
    _, perm, fits = best
    eps = np.array([e for e, _ in fits])
    errors = np.array([r for _, r in fits])
    tv = np.full(d, np.nan)
    densities = getattr(fitted, "densities", None)
    if truth_densities is not None and densities:
        for j in range(d):
            ref = truth_densities[j]
            if ref is not None:
                scaled = densities[perm[j]].transform(1.0 / eps[j])
                tv[j] = tv_distance(scaled, ref)
    return Alignment(tuple(int(p) for p in perm), eps, errors, tv)

"""Univariate log-concave maximum likelihood estimation.

The estimator maximises

    sum_i w_i * phi(v_i) - integral(exp(phi)) + 1

over concave functions ``phi``.  The maximiser is piecewise linear with
knots at a subset of the data points and support ``[v_min, v_max]``.  It is
computed with an active-set method: the knot set grows one point at a time
(the point with the largest directional gain) and the knot values are
optimised by damped Newton steps, dropping knots whenever concavity would
be violated.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .exceptions import DegenerateSample

DEFAULT_TOL = 1e-8
MERGE_TOL = 1e-10
# Values closer than this fraction of the data range are treated as ties.
TIE_TOL = 1e-12

_TAYLOR_TERMS = 24


def _unit_moments(D):
    """Integrals of u**a * exp(u*D) over [0, 1] for a = 0, 1, 2 and D <= 0."""
    D = np.asarray(D, dtype=float)
    m0 = np.empty_like(D)
    m1 = np.empty_like(D)
    m2 = np.empty_like(D)
    small = D > -1.0
    if np.any(small):
        ds = D[small]
        term = np.ones_like(ds)
        s0 = np.zeros_like(ds)
        s1 = np.zeros_like(ds)
        s2 = np.zeros_like(ds)
        for k in range(_TAYLOR_TERMS):
            s0 += term / (k + 1)
            s1 += term / (k + 2)
            s2 += term / (k + 3)
            term *= ds / (k + 1)
        m0[small], m1[small], m2[small] = s0, s1, s2
    big = ~small
    if np.any(big):
        db = D[big]
        e = np.exp(db)
        m0[big] = np.expm1(db) / db
        m1[big] = (e * (db - 1.0) + 1.0) / db**2
        m2[big] = (e * (db * db - 2.0 * db + 2.0) - 2.0) / db**3
    return m0, m1, m2


def segment_integrals(p, q):
    """Weighted integrals of exp((1-u)p + uq) over u in [0, 1].

    Returns ``(J00, J10, J01, J20, J11, J02)`` where ``Jab`` carries the
    weight ``(1-u)**a * u**b``.  Evaluation always expands around the larger
    endpoint so nothing overflows for steep segments.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    flip = q > p
    top = np.where(flip, q, p)
    m0, m1, m2 = _unit_moments(-np.abs(q - p))
    scale = np.exp(top)
    # moments measured from the larger endpoint
    near = scale * (m0 - m1)
    far = scale * m1
    near2 = scale * (m0 - 2.0 * m1 + m2)
    far2 = scale * m2
    mid = scale * (m1 - m2)
    j00 = scale * m0
    j10 = np.where(flip, far, near)
    j01 = np.where(flip, near, far)
    j20 = np.where(flip, far2, near2)
    j02 = np.where(flip, near2, far2)
    return j00, j10, j01, j20, mid, j02


def segment_mass(p, q):
    """Integral of exp((1-u)p + uq) over u in [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = -np.abs(q - p)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(d < 0, np.expm1(d) / np.where(d < 0, d, 1.0), 1.0)
    return np.exp(np.maximum(p, q)) * ratio


@dataclass(frozen=True)
class WeightedSample:
    """Sorted distinct values with positive weights summing to one."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        w = np.array(self.weights, dtype=float)
        if v.ndim != 1 or v.shape != w.shape:
            raise ValueError("values and weights must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("sample contains non-finite entries")
        if v.size < 2:
            raise DegenerateSample("need at least two distinct values")
        if np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_values(cls, values, weights=None, tie_tol=TIE_TOL):
        """Sort raw observations and collapse ties into weights.

        Values whose gap is at most ``tie_tol`` times the data range are
        merged.  The minimum and maximum are kept exactly so that every
        observation lies in the closed range of the result.
        """
        x = np.asarray(values, dtype=float).ravel()
        if weights is None:
            w = np.full(x.size, 1.0 / max(x.size, 1))
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape:
                raise ValueError("weights must match values")
        if x.size == 0 or not np.all(np.isfinite(x)):
            raise ValueError("sample must be non-empty and finite")
        order = np.argsort(x, kind="stable")
        x = x[order]
        w = w[order]
        span = x[-1] - x[0]
        if span <= 0:
            raise DegenerateSample("need at least two distinct values")
        new_group = np.diff(x) > tie_tol * span
        group = np.concatenate(([0], np.cumsum(new_group)))
        starts = np.flatnonzero(np.concatenate(([True], new_group)))
        vals = x[starts]
        vals[-1] = x[-1]
        wts = np.bincount(group, weights=w)
        if vals.size < 2:
            raise DegenerateSample("need at least two distinct values")
        return cls(vals, wts / wts.sum())

    def mean(self):
        return float(self.weights @ self.values)


@dataclass(frozen=True)
class LogConcaveDensity:
    """Density exp(phi) with phi concave and linear between ``knots``.

    The density vanishes outside ``[knots[0], knots[-1]]``; the support is
    closed.
    """

    knots: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        t = np.array(self.knots, dtype=float)
        p = np.array(self.phi, dtype=float)
        if t.ndim != 1 or t.shape != p.shape or t.size < 2:
            raise ValueError("knots and phi must be 1-d, equal length, at least 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knots must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("phi must be finite")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "phi", p)

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def slopes(self):
        """Slopes b_k of the linear pieces, left to right (decreasing)."""
        return np.diff(self.phi) / np.diff(self.knots)

    @property
    def intercepts(self):
        """Offsets beta_k such that phi(x) = b_k * x - beta_k on piece k."""
        return self.slopes * self.knots[:-1] - self.phi[:-1]

    def is_concave(self, tol=0.0):
        b = self.slopes
        return bool(np.all(b[1:] - b[:-1] <= tol))

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.knots, self.phi)
        out = np.where((x < self.knots[0]) | (x > self.knots[-1]), -np.inf, out)
        return out if out.ndim else float(out)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def _segment_masses(self):
        return np.diff(self.knots) * segment_mass(self.phi[:-1], self.phi[1:])

    def integrate(self, a, b):
        """Exact integral of the density over [a, b]."""
        if a > b:
            raise ValueError("need a <= b")
        t = self.knots
        lo = np.clip(a, t[:-1], t[1:])
        hi = np.clip(b, t[:-1], t[1:])
        keep = hi > lo
        if not np.any(keep):
            return 0.0
        lo, hi = lo[keep], hi[keep]
        j00 = segment_mass(np.interp(lo, t, self.phi), np.interp(hi, t, self.phi))
        return float(np.sum((hi - lo) * j00))

    def total_mass(self):
        return float(np.sum(self._segment_masses()))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        t = self.knots
        masses = self._segment_masses()
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        xc = np.clip(x, t[0], t[-1])
        k = np.clip(np.searchsorted(t, xc, side="right") - 1, 0, t.size - 2)
        left = self.phi[k]
        right = np.interp(xc, t, self.phi)
        part = (xc - t[k]) * segment_mass(left, right)
        out = np.minimum((cum[k] + part) / cum[-1], 1.0)
        return out if out.ndim else float(out)

    def first_moment(self):
        """Mean of the density, in closed form."""
        t = self.knots
        delta = np.diff(t)
        j00, _, j01, *_ = segment_integrals(self.phi[:-1], self.phi[1:])
        return float(np.sum(delta * (t[:-1] * j00 + delta * j01)))

    def sample(self, rng, n):
        """Draw ``n`` values by inverting the CDF piece by piece."""
        rng = np.random.default_rng(rng)
        masses = self._segment_masses()
        probs = masses / masses.sum()
        k = rng.choice(probs.size, size=n, p=probs)
        u = rng.random(n)
        delta = np.diff(self.knots)[k]
        rise = (self.phi[1:] - self.phi[:-1])[k]
        flat = np.abs(rise) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(flat, u, np.log1p(u * np.expm1(rise)) / np.where(flat, 1.0, rise))
        return self.knots[k] + np.clip(frac, 0.0, 1.0) * delta

    def transform(self, scale, shift=0.0):
        """Density of ``scale * X + shift`` for X with this density."""
        if scale == 0:
            raise ValueError("scale must be non-zero")
        knots = self.knots * scale + shift
        phi = self.phi - math.log(abs(scale))
        if scale < 0:
            knots, phi = knots[::-1], phi[::-1]
        return LogConcaveDensity(knots, phi)

    def to_dict(self):
        return {
            "knots": [float(format(v, ".17g")) for v in self.knots],
            "phi": [float(format(v, ".17g")) for v in self.phi],
        }

    def to_json(self):
        """JSON text with every real written to 17 significant digits."""
        knots = ", ".join(format(v, ".17g") for v in self.knots)
        phi = ", ".join(format(v, ".17g") for v in self.phi)
        return f'{{"knots": [{knots}], "phi": [{phi}]}}'

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["knots"], dtype=float), np.asarray(data["phi"], dtype=float))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def objective(density, sample):
    """Penalised log-likelihood ``sum w log f(v) - int f + 1``."""
    if not isinstance(sample, WeightedSample):
        sample = WeightedSample.from_values(sample)
    logf = density.log_pdf(sample.values)
    return float(sample.weights @ logf - density.total_mass() + 1.0)


# ---------------------------------------------------------------------------
# solver


def _knot_weights(u, w, knots):
    """Mass each knot receives when data weights are split linearly."""
    t = u[knots]
    seg = np.clip(np.searchsorted(t, u, side="right") - 1, 0, t.size - 2)
    lam = (u - t[seg]) / (t[seg + 1] - t[seg])
    out = np.bincount(seg, weights=w * (1.0 - lam), minlength=t.size)
    out += np.bincount(seg + 1, weights=w * lam, minlength=t.size)
    return out


def _reduced_objective(theta, delta, wk):
    return wk @ theta - delta @ segment_mass(theta[:-1], theta[1:])


def _newton(theta, delta, wk, max_iter=100):
    """Maximise the objective over knot values for a fixed knot set."""
    f = _reduced_objective(theta, delta, wk)
    for _ in range(max_iter):
        _, j10, j01, j20, j11, j02 = segment_integrals(theta[:-1], theta[1:])
        grad = wk.copy()
        grad[:-1] -= delta * j10
        grad[1:] -= delta * j01
        diag = np.zeros_like(theta)
        diag[:-1] += delta * j20
        diag[1:] += delta * j02
        band = np.zeros((2, theta.size))
        band[0, 1:] = delta * j11
        band[1] = diag
        step = solveh_banded(band, grad)
        decrement = grad @ step
        if decrement < 1e-22:
            break
        if decrement < 1e-12:
            # quadratic regime; rounding would defeat a sufficient-increase test
            theta = theta + step
            f = _reduced_objective(theta, delta, wk)
            continue
        s = 1.0
        while s >= 1e-10:
            cand = theta + s * step
            fc = _reduced_objective(cand, delta, wk)
            if fc >= f + 0.25 * s * decrement:
                break
            s *= 0.5
        else:
            break
        theta, f = cand, fc
    return theta


def _slope_changes(theta, t):
    b = np.diff(theta) / np.diff(t)
    return b[:-1] - b[1:]


def _knot_gains(u, w, phi):
    """Directional derivative for inserting a concave kink at each point."""
    delta = np.diff(u)
    _, j10, j01, *_ = segment_integrals(phi[:-1], phi[1:])
    grad = w.copy()
    grad[:-1] -= delta * j10
    grad[1:] -= delta * j01
    # sum over i > j of grad_i * (u_i - u_j), via suffix sums
    s0 = np.concatenate((np.cumsum(grad[::-1])[::-1][1:], [0.0]))
    s1 = np.concatenate((np.cumsum((grad * u)[::-1])[::-1][1:], [0.0]))
    return -(s1 - u * s0)


def _active_set(u, w, tol, max_iter):
    m = u.size
    knots = np.array([0, m - 1])
    theta = _newton(np.zeros(2), np.diff(u[knots]), _knot_weights(u, w, knots))
    phi = np.interp(u, u[knots], theta)
    for _ in range(max_iter):
        if m <= 2:
            break
        gains = _knot_gains(u, w, phi)
        gains[knots] = -np.inf
        j = int(np.argmax(gains))
        if gains[j] <= tol:
            break
        knots = np.sort(np.append(knots, j))
        start = phi[knots]
        for _ in range(m):
            t = u[knots]
            delta = np.diff(t)
            psi = _newton(start, delta, _knot_weights(u, w, knots))
            c_psi = _slope_changes(psi, t)
            if np.all(c_psi >= 0):
                break
            c_start = _slope_changes(start, t)
            bad = c_psi < 0
            step = np.min(c_start[bad] / (c_start[bad] - c_psi[bad]))
            start = start + step * (psi - start)
            c_new = _slope_changes(start, t)
            drop = c_new <= MERGE_TOL * (1.0 + np.abs(c_new).max())
            drop[np.argmin(c_new)] = True
            keep = np.concatenate(([True], ~drop, [True]))
            knots, start = knots[keep], start[keep]
        phi = np.interp(u, u[knots], psi)
    return knots, phi[knots]


def fit_log_concave(sample, tol=DEFAULT_TOL, max_iter=None):
    """Log-concave maximum likelihood estimate for a weighted sample.

    ``sample`` may be a :class:`WeightedSample` or raw observations, in which
    case ties are collapsed into weights first.
    """
    if not isinstance(sample, WeightedSample):
        sample = WeightedSample.from_values(sample)
    v, w = sample.values, sample.weights
    lo, span = v[0], v[-1] - v[0]
    # solve on [0, 1]; makes the fit equivariant under affine maps
    u = (v - lo) / span
    u[-1] = 1.0
    knots, theta = _active_set(u, w, tol, max_iter or 4 * v.size + 10)
    t = u[knots]
    c = _slope_changes(theta, t)
    keep = np.concatenate(([True], c > MERGE_TOL * (1.0 + np.abs(np.diff(theta) / np.diff(t)).max()), [True]))
    knots, theta = knots[keep], theta[keep]
    delta = np.diff(u[knots])
    mass = delta @ segment_mass(theta[:-1], theta[1:])
    theta = theta - math.log(mass)
    return LogConcaveDensity(v[knots], theta - math.log(span))

"""Why plain nonparametric (empirical) likelihood fails for ICA.

For data in general position, any d+1 observations J define an unmixing
matrix W_J whose rows each send d of those points to exactly 1.  Every such
W_J attains the largest possible empirical likelihood, so the maximiser is
wildly non-unique.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NotGeneralPosition
from .metrics import amari
from .whiten import as_dataset

COND_LIMIT = 1e12
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class IndexSubset:
    """d + 1 distinct, sorted, zero-based observation indices."""

    J: tuple

    def __post_init__(self):
        J = tuple(sorted(int(i) for i in self.J))
        if len(set(J)) != len(J):
            raise ValueError("indices must be distinct")
        if J and J[0] < 0:
            raise ValueError("indices must be non-negative")
        object.__setattr__(self, "J", J)

    def check(self, n, d):
        if len(self.J) != d + 1:
            raise ValueError(f"need exactly d + 1 = {d + 1} indices, got {len(self.J)}")
        if self.J[-1] >= n:
            raise ValueError("index out of range")


def degenerate_unmixer(data, J):
    """The unmixing matrix W_J built from the observations indexed by J.

    Row j solves ``X_(-j)^T w_j = 1`` where ``X_(-j)`` holds the selected
    points (as columns) with the j-th removed.
    """
    X = as_dataset(data)
    n, d = X.shape
    J = J if isinstance(J, IndexSubset) else IndexSubset(tuple(J))
    J.check(n, d)
    XJ = X[list(J.J)].T
    for k in range(d + 1):
        if np.linalg.cond(np.delete(XJ, k, axis=1)) > COND_LIMIT:
            raise NotGeneralPosition(f"points {J.J} are not in general position")
    W = np.empty((d, d))
    for j in range(d):
        W[j] = np.linalg.solve(np.delete(XJ, j, axis=1).T, np.ones(d))
    return W


def _tie_class_sizes(values):
    v = np.sort(values)
    scale = max(float(np.abs(v).max()), np.finfo(float).tiny)
    breaks = np.flatnonzero(np.diff(v) > TIE_RTOL * scale)
    edges = np.concatenate(([0], breaks + 1, [v.size]))
    return np.diff(edges)


def empirical_likelihood(W, data):
    """Log of the maximal empirical likelihood at W.

    For each row, projections are grouped into tie classes and the optimal
    discrete marginal puts mass |class|/n on each, which gives
    ``sum_j (-n log n + sum_classes c log c)``.
    """
    X = as_dataset(data)
    n = X.shape[0]
    P = X @ np.asarray(W, dtype=float).T
    total = 0.0
    for j in range(P.shape[1]):
        sizes = _tie_class_sizes(P[:, j])
        total += -n * math.log(n) + float(np.sum(sizes * np.log(sizes)))
    return total


def max_empirical_loglik(n, d):
    """The bound d * (d log d - n log n) attained by every W_J."""
    return d * (d * math.log(d) - n * math.log(n))


def random_subsets(n, d, count, rng):
    """``count`` distinct random IndexSubsets."""
    rng = np.random.default_rng(rng)
    total = math.comb(n, d + 1)
    if count > total:
        raise ValueError("not enough distinct subsets")
    seen = []
    while len(seen) < count:
        J = tuple(sorted(rng.choice(n, size=d + 1, replace=False).tolist()))
        if J not in seen:
            seen.append(J)
    return [IndexSubset(J) for J in seen]


def separated_subsets(data, count, min_amari, rng, max_candidates=10_000):
    """Screen random subsets until ``count`` have pairwise-distant W_J.

    A candidate is kept when its unmixer lies more than ``min_amari`` (Amari
    metric) from every one kept so far.  Returns the subsets and the number
    of candidates examined.
    """
    X = as_dataset(data)
    n, d = X.shape
    rng = np.random.default_rng(rng)
    kept, mats, seen = [], [], set()
    examined = 0
    while len(kept) < count:
        if examined >= max_candidates:
            raise ValueError(f"found only {len(kept)} separated subsets in {max_candidates} candidates")
        J = IndexSubset(tuple(rng.choice(n, size=d + 1, replace=False).tolist()))
        if J.J in seen:
            continue
        seen.add(J.J)
        examined += 1
        W = degenerate_unmixer(X, J)
        if all(amari(W, M) > min_amari for M in mats):
            kept.append(J)
            mats.append(W)
    return kept, examined


def demo_report(data, subsets):
    """Per-subset likelihoods and pairwise Amari distances, as plain data."""
    X = as_dataset(data)
    n, d = X.shape
    mats = [degenerate_unmixer(X, J) for J in subsets]
    entries = [
        {"J": list(J.J), "W": W.tolist(), "log_empirical_likelihood": empirical_likelihood(W, X)}
        for J, W in zip(subsets, mats)
    ]
    pairs = [
        {"a": a, "b": b, "amari": amari(mats[a], mats[b])}
        for a, b in itertools.combinations(range(len(mats)), 2)
    ]
    return {
        "n": n,
        "d": d,
        "bound": max_empirical_loglik(n, d),
        "subsets": entries,
        "pairwise_amari": pairs,
        "min_pairwise_amari": min((p["amari"] for p in pairs), default=None),
    }

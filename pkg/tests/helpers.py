"""Shared fixtures-by-function for the test modules."""
import numpy as np

from logcon_ica.lcmle import fit_log_concave
from logcon_ica.manifold import PiecewiseLogLik, haar_orthogonal, matrix_exp

KINK_CLEARANCE = 1e-4


def random_skew(d, rng):
    M = rng.standard_normal((d, d))
    Y = (M - M.T) / 2.0
    return Y / np.linalg.norm(Y)


def _min_kink_distance(L, W, Y, eps):
    """Smallest distance from any projection on the path to a crossing point."""
    worst = np.inf
    for t in (-eps, 0.0, eps):
        P = L.data @ (W @ matrix_exp(t * Y)).T
        for j in range(P.shape[1]):
            b, beta = L.slopes[j], L.intercepts[j]
            if b.size < 2:
                continue
            cross = np.diff(beta) / np.diff(b)
            worst = min(worst, np.min(np.abs(P[:, j][:, None] - cross[None, :])))
    return worst


def generic_configuration(d, rng, n=60, eps=1e-6):
    """(L, W, Y) with every projection well clear of the kinks.

    The densities are fitted to an independent sample, so data projections
    do not sit on knots; draws that come too close are rejected.
    """
    while True:
        W = haar_orthogonal(d, rng)
        densities = [fit_log_concave(rng.laplace(size=40) * rng.uniform(0.5, 2.0)) for _ in range(d)]
        data = rng.standard_normal((n, d)) * 0.7
        L = PiecewiseLogLik.from_densities(densities, data)
        Y = random_skew(d, rng)
        if _min_kink_distance(L, W, Y, eps) > KINK_CLEARANCE:
            return L, W, Y


def central_difference(L, W, Y, eps=1e-6):
    return (L(W @ matrix_exp(eps * Y)) - L(W @ matrix_exp(-eps * Y))) / (2 * eps)

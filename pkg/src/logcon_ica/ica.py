"""Nonparametric maximum likelihood ICA with log-concave marginals.

The data are pre-whitened, after which the unmixing matrix is searched over
SO(d).  Each restart alternates between fitting the d marginal log-concave
MLEs to the current projections and geodesic ascent of the piecewise-linear
objective over rotations.  The restart with the largest log-likelihood wins.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import StallAtStationary
from .lcmle import DEFAULT_TOL, LogConcaveDensity, WeightedSample, fit_log_concave
from .manifold import PiecewiseLogLik, best_direction, haar_orthogonal, line_search
from .whiten import WhiteningTransform, as_dataset, fit_whitener, unwhiten_unmixer, whiten

logger = logging.getLogger(__name__)

THREADS_ENV = "LOGCON_ICA_THREADS"
SUPPORT_RTOL = 1e-12


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 10
    eta: float = 1e-7
    alpha: float = 0.3
    gamma: float = 0.5
    max_outer_iters: int = 500
    # geodesic moves allowed between two density refits
    max_w_steps: int = 50
    w_step_tol: float = 1e-9
    seed: int = 0
    lcmle_tol: float = DEFAULT_TOL
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not (0 < self.alpha < 1 and 0 < self.gamma < 1):
            raise ValueError("alpha and gamma must lie in (0, 1)")
        if self.max_outer_iters < 1 or self.max_w_steps < 1:
            raise ValueError("iteration caps must be positive")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class IcaModel:
    W: np.ndarray
    densities: tuple
    loglik: float

    def to_dict(self):
        return {
            "W": np.asarray(self.W).tolist(),
            "densities": [f.to_dict() for f in self.densities],
            "loglik": self.loglik,
        }


@dataclass
class RestartRecord:
    loglik: float
    iterations: int
    trace: list
    converged: bool
    # sweeps whose refitted likelihood fell below the previous one
    rejected_sweeps: int = 0
    w_steps: int = 0
    # "tolerance", "no_ascent", "decrease" or "max_iters"
    stop_reason: str = ""
    O: np.ndarray = field(default=None, repr=False)
    densities: tuple = field(default=(), repr=False)

    def summary(self):
        return {
            "loglik": self.loglik,
            "iterations": self.iterations,
            "trace": list(self.trace),
            "converged": self.converged,
            "rejected_sweeps": self.rejected_sweeps,
            "w_steps": self.w_steps,
            "stop_reason": self.stop_reason,
        }


@dataclass
class FitResult:
    best: IcaModel
    O: np.ndarray
    best_index: int
    per_restart: list
    whitener: WhiteningTransform
    config: FitConfig

    @property
    def converged(self):
        return self.per_restart[self.best_index].converged

    @property
    def iterations(self):
        return self.per_restart[self.best_index].iterations

    def to_dict(self):
        return {
            "whitener": self.whitener.to_dict(),
            "O": self.O.tolist(),
            "W": self.best.W.tolist(),
            "densities": [f.to_dict() for f in self.best.densities],
            "loglik": self.best.loglik,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "best_restart": self.best_index,
            "restarts": [r.summary() for r in self.per_restart],
        }


def _snap_to_support(f, y):
    lo, hi = f.support
    slack = SUPPORT_RTOL * (hi - lo)
    y = np.where((y < lo) & (y >= lo - slack), lo, y)
    return np.where((y > hi) & (y <= hi + slack), hi, y)


def log_likelihood(W, densities, data):
    """log|det W| + (1/n) sum_i sum_j log f_j(w_j . x_i); -inf off support.

    Projections within a relative 1e-12 of a support endpoint count as on
    it, so rounding in the matrix product cannot turn a training point into
    a zero of its own fitted density.
    """
    W = np.asarray(W, dtype=float)
    X = as_dataset(data)
    S = X @ W.T
    total = 0.0
    for j, f in enumerate(densities):
        total += np.sum(f.log_pdf(_snap_to_support(f, S[:, j])))
    return float(np.linalg.slogdet(W)[1] + total / X.shape[0])


def unmix(model, data):
    """Estimated sources s_i = W x_i, one row per observation."""
    W = model.W if isinstance(model, IcaModel) else np.asarray(model, dtype=float)
    X = as_dataset(data)
    if X.shape[1] != W.shape[1]:
        raise ValueError("dimension mismatch between model and data")
    return X @ W.T


def fit_marginals(projections, tol=DEFAULT_TOL):
    """Log-concave MLE of every column of ``projections``."""
    P = np.asarray(projections, dtype=float)
    return tuple(fit_log_concave(WeightedSample.from_values(P[:, j]), tol) for j in range(P.shape[1]))


def _mean_loglik(densities, P):
    return float(sum(np.sum(f.log_pdf(P[:, j])) for j, f in enumerate(densities)) / P.shape[0])


def _w_steps(densities, Z, O, config):
    """Geodesic ascent of g with the marginals held fixed."""
    L = PiecewiseLogLik.from_densities(densities, Z)
    steps = 0
    for _ in range(config.max_w_steps):
        Y, deriv = best_direction(L, O)
        if deriv <= config.w_step_tol:
            break
        try:
            O, _ = line_search(L, O, Y, deriv, config.alpha, config.gamma)
        except StallAtStationary:
            break
        steps += 1
    return O, steps


def run_restart(Z, O, config):
    """One restart of the alternating scheme on whitened data ``Z``."""
    densities = fit_marginals(Z @ O.T, config.lcmle_tol)
    ll = _mean_loglik(densities, Z @ O.T)
    trace = [ll]
    rejected = 0
    total_steps = 0
    converged = False
    reason = "max_iters"
    it = 0
    for it in range(1, config.max_outer_iters + 1):
        O_new, steps = _w_steps(densities, Z, O, config)
        total_steps += steps
        if steps == 0:
            # densities are already optimal for O and no direction ascends
            converged, reason = True, "no_ascent"
            break
        new_densities = fit_marginals(Z @ O_new.T, config.lcmle_tol)
        ll_new = _mean_loglik(new_densities, Z @ O_new.T)
        improvement = (ll_new - ll) / (abs(ll) + 1e-300)
        if ll_new < ll:
            # the refit landed below the previous iterate; keep the previous one
            rejected += 1
            converged, reason = True, "decrease"
            break
        O, densities, ll = O_new, new_densities, ll_new
        trace.append(ll)
        if improvement < config.eta:
            converged, reason = True, "tolerance"
            break
    if not converged:
        logger.warning("restart stopped at max_outer_iters=%d without converging", config.max_outer_iters)
    return RestartRecord(ll, it, trace, converged, rejected, total_steps, reason, O, densities)


def _restart_job(args):
    Z, seed_seq, config = args
    O0 = haar_orthogonal(Z.shape[1], np.random.default_rng(seed_seq))
    return run_restart(Z, O0, config)


def resolve_threads(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def fit(data, config=None):
    """Fit the log-concave ICA model to an (n, d) array of observations.

    Raises RankDeficient (alias DegenerateData) when the observations do
    not span d dimensions.
    """
    config = config or FitConfig()
    X = as_dataset(data)
    n, d = X.shape
    whitener = fit_whitener(X)
    Z = whiten(whitener, X)
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    jobs = [(Z, s, config) for s in seeds]
    if config.threads > 1 and config.restarts > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(_restart_job, jobs))
    else:
        records = [_restart_job(j) for j in jobs]
    # lowest index wins ties
    best_index = int(np.argmax([r.loglik for r in records]))
    O = records[best_index].O
    W = unwhiten_unmixer(whitener, O)
    # refit on the original-scale projections so supports contain them exactly
    densities = fit_marginals(X @ W.T, config.lcmle_tol)
    model = IcaModel(W, densities, log_likelihood(W, densities, X))
    return FitResult(model, O, best_index, records, whitener, config)


def model_from_dict(data):
    """Rebuild an IcaModel from the ``to_dict`` form of a model or fit."""
    densities = tuple(LogConcaveDensity.from_dict(f) for f in data["densities"])
    return IcaModel(np.asarray(data["W"], dtype=float), densities, float(data["loglik"]))

"""Simulation study: rotated two-dimensional signals with known sources."""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import stats

from .ica import FitConfig, fit
from .manifold import haar_orthogonal
from .metrics import align, amari
from .whiten import as_dataset, fit_whitener, whiten

CSV_COLUMNS = (
    "kind", "n", "rep", "seed", "amari_lcica", "amari_baseline",
    "tv_1", "tv_2", "loglik", "iters", "converged",
)


class SourceKind(enum.Enum):
    UNIFORM = "uniform"
    SHIFTED_EXPONENTIAL = "exponential"
    SCALED_T2 = "t2"
    NORMAL_MIXTURE = "mixture"
    SHIFTED_BINOMIAL = "binomial"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(name.lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown source kind {name!r}; choose from {choices}") from None

    def sample(self, rng, size):
        rng = np.random.default_rng(rng)
        if self is SourceKind.UNIFORM:
            return rng.uniform(-0.5, 0.5, size)
        if self is SourceKind.SHIFTED_EXPONENTIAL:
            return rng.exponential(1.0, size) - 1.0
        if self is SourceKind.SCALED_T2:
            z = rng.standard_normal(size)
            chi2 = rng.chisquare(2, size)
            return z / np.sqrt(chi2 / 2.0) / math.sqrt(2.0)
        if self is SourceKind.NORMAL_MIXTURE:
            first = rng.random(size) < 0.7
            return np.where(first, rng.normal(-0.9, 1.0, size), rng.normal(2.1, 1.0, size))
        return rng.binomial(3, 0.5, size) - 1.5

    def true_density(self):
        """Density of the source law, or None for the atomic binomial."""
        if self is SourceKind.SCALED_T2:
            return stats.t(2, scale=1.0 / math.sqrt(2.0))
        if self is SourceKind.NORMAL_MIXTURE:
            return _NormalMixture()
        if self is SourceKind.SHIFTED_BINOMIAL:
            return None
        return self.reference_density()

    def reference_density(self):
        """Known log-concave projection of the source law, when there is one.

        For the scaled t2 source this is the standard Laplace density; its TV
        distance is recorded for information only.
        """
        if self is SourceKind.UNIFORM:
            return stats.uniform(loc=-0.5, scale=1.0)
        if self is SourceKind.SHIFTED_EXPONENTIAL:
            return stats.expon(loc=-1.0)
        if self is SourceKind.SCALED_T2:
            return stats.laplace()
        return None


class _NormalMixture:
    """0.7 N(-0.9, 1) + 0.3 N(2.1, 1)."""

    def pdf(self, x):
        return 0.7 * stats.norm.pdf(x, -0.9) + 0.3 * stats.norm.pdf(x, 2.1)

    def cdf(self, x):
        return 0.7 * stats.norm.cdf(x, -0.9) + 0.3 * stats.norm.cdf(x, 2.1)

    def support(self):
        return -np.inf, np.inf


FIGURES = {
    "fig1": SourceKind.UNIFORM,
    "fig2": SourceKind.SHIFTED_EXPONENTIAL,
    "fig3": SourceKind.SCALED_T2,
    "fig4": SourceKind.NORMAL_MIXTURE,
    "fig5": SourceKind.SHIFTED_BINOMIAL,
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: SourceKind
    n: int = 200
    d: int = 2
    reps: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind.parse(self.kind))
        if self.d != 2:
            raise ValueError("the simulation presets are two-dimensional")
        if self.n < self.d + 1:
            raise ValueError("need n >= d + 1")
        if self.reps < 1:
            raise ValueError("reps must be positive")


def mixing_matrix():
    """Rotation by pi/3."""
    c = 0.5
    s = math.sqrt(3.0) / 2.0
    return np.array([[c, -s], [s, c]])


def generate(spec, rng):
    """Signals with independent coordinates and their rotated observations."""
    S = spec.kind.sample(rng, (spec.n, spec.d))
    X = S @ mixing_matrix().T
    return S, X


class BaselineFit(NamedTuple):
    W: np.ndarray
    O: np.ndarray
    converged: bool


def baseline_kurtosis_fit(data, rng=None, max_iter=200, tol=1e-8):
    """Deflationary fixed-point ICA with the kurtosis contrast.

    A minimal stand-in for parametric ICA: each component maximises
    |kurtosis| of its projection via ``w <- E[z (w.z)^3] - 3w`` on whitened
    data, with Gram-Schmidt against earlier components.
    """
    X = as_dataset(data)
    t = fit_whitener(X)
    Z = whiten(t, X)
    d = Z.shape[1]
    rng = np.random.default_rng(rng)
    O = np.zeros((d, d))
    converged = True
    for j in range(d):
        w = rng.standard_normal(d)
        w -= O[:j].T @ (O[:j] @ w)
        w /= np.linalg.norm(w)
        for _ in range(max_iter):
            y = Z @ w
            w_new = (Z * (y**3)[:, None]).mean(axis=0) - 3.0 * w
            w_new -= O[:j].T @ (O[:j] @ w_new)
            w_new /= np.linalg.norm(w_new)
            done = 1.0 - abs(w_new @ w) < tol
            w = w_new
            if done:
                break
        else:
            converged = False
        O[j] = w
    return BaselineFit(O @ t.inv_sqrt, O, converged)


def rep_seeds(spec):
    """Per-replication integer seeds, fixed before any work is scheduled."""
    children = np.random.SeedSequence(spec.seed).spawn(spec.reps)
    return [int(c.generate_state(1)[0]) for c in children]


def run_rep(spec, config, rep, seed, with_baseline=True):
    """One replication: data, fit, baseline and null comparison."""
    data_ss, base_ss, null_ss = np.random.SeedSequence(seed).spawn(3)
    _, X = generate(spec, np.random.default_rng(data_ss))
    W0 = np.linalg.inv(mixing_matrix())
    result = fit(X, replace(config, seed=seed, threads=1))
    ref = spec.kind.reference_density()
    alignment = align(result.best, W0, [ref] * spec.d)
    if with_baseline:
        base = baseline_kurtosis_fit(X, np.random.default_rng(base_ss))
        amari_base, base_ok = amari(base.W, W0), base.converged
    else:
        amari_base, base_ok = float("nan"), None
    O_null = haar_orthogonal(spec.d, np.random.default_rng(null_ss))
    W_null = O_null @ result.whitener.inv_sqrt
    return {
        "kind": spec.kind.value,
        "n": spec.n,
        "rep": rep,
        "seed": seed,
        "amari_lcica": amari(result.best.W, W0),
        "amari_baseline": amari_base,
        "amari_null": amari(W_null, W0),
        "tv": alignment.tv_errors.tolist(),
        "row_errors": alignment.row_errors.tolist(),
        "loglik": result.best.loglik,
        "iters": result.iterations,
        "converged": result.converged,
        "baseline_converged": base_ok,
    }


def _rep_job(args):
    return run_rep(*args)


def run_experiment(spec, config=None, with_baseline=True, threads=1):
    """All replications of ``spec``, in replication order."""
    config = config or FitConfig()
    jobs = [(spec, config, rep, seed, with_baseline) for rep, seed in enumerate(rep_seeds(spec))]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_rep_job, jobs))
    return [_rep_job(j) for j in jobs]


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def records_to_csv(records):
    """CSV text with one row per replication, in the fixed column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        tv = list(r["tv"]) + [float("nan")] * (2 - len(r["tv"]))
        row = [
            r["kind"], r["n"], r["rep"], r["seed"], r["amari_lcica"], r["amari_baseline"],
            tv[0], tv[1], r["loglik"], r["iters"], r["converged"],
        ]
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_records_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append({
            "kind": row["kind"],
            "n": int(row["n"]),
            "rep": int(row["rep"]),
            "seed": int(row["seed"]),
            "amari_lcica": float(row["amari_lcica"]),
            "amari_baseline": float(row["amari_baseline"]),
            "tv": [float(row["tv_1"]), float(row["tv_2"])],
            "loglik": float(row["loglik"]),
            "iters": int(row["iters"]),
            "converged": row["converged"] == "true",
        })
    return out


def summarize(records, key="amari_lcica"):
    """Quartiles of ``key`` per source kind."""
    out = {}
    for kind in dict.fromkeys(r["kind"] for r in records):
        vals = np.array([r[key] for r in records if r["kind"] == kind], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            continue
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        out[kind] = {"n": int(vals.size), "q1": float(q1), "median": float(med), "q3": float(q3)}
    return out

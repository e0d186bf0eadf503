"""End-to-end figure presets for the simulation study."""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .ica import FitConfig, fit, unmix
from .io import write_dataset
from .metrics import align, amari
from .plotting import PlotKind, PlotSpec, density_curve, emit_plot
from .sim import FIGURES, ExperimentSpec, SourceKind, generate, mixing_matrix, records_to_csv, run_experiment

FIGURE_IDS = tuple(FIGURES) + ("fig6", "fig7")


def reconstruction_figure(fig_id, outdir, n=200, seed=0, config=None):
    """Signal, observations, reconstruction and fitted marginals for one preset."""
    kind = FIGURES[fig_id]
    config = replace(config or FitConfig(), seed=seed)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = ExperimentSpec(kind, n=n, reps=1, seed=seed)
    S, X = generate(spec, np.random.default_rng(np.random.SeedSequence(seed)))
    result = fit(X, config)
    W0 = np.linalg.inv(mixing_matrix())
    alignment = align(result.best, W0)
    # order and scale the reconstruction like the true sources
    S_hat = unmix(result.best, X)
    S_hat = np.column_stack([S_hat[:, p] / e for p, e in zip(alignment.pi, alignment.eps)])
    files = []
    csv_path = outdir / f"{fig_id}_data.csv"
    write_dataset(csv_path, np.column_stack([S, X, S_hat]), header=["s1", "s2", "x1", "x2", "shat1", "shat2"])
    files.append(csv_path)
    panels = {
        "signal": (S, "true signal"),
        "observations": (X, "rotated observations"),
        "reconstructed": (S_hat, "reconstructed signal"),
    }
    for name, (pts, title) in panels.items():
        path = outdir / f"{fig_id}_{name}.svg"
        emit_plot(PlotSpec(PlotKind.SCATTER, {title: pts}, "first coordinate", "second coordinate", title), path)
        files.append(path)
    series = {}
    truth = kind.true_density()
    for j, (p, e) in enumerate(zip(alignment.pi, alignment.eps)):
        f = result.best.densities[p].transform(1.0 / e)
        series[f"fitted marginal {j + 1}"] = density_curve(f)
    if truth is not None:
        lo = min(c[0, 0] for c in series.values())
        hi = max(c[-1, 0] for c in series.values())
        series["true marginal"] = density_curve(truth, lo, hi)
    path = outdir / f"{fig_id}_densities.svg"
    emit_plot(PlotSpec(PlotKind.DENSITY_OVERLAY, series, "x", "density", f"{kind.value} marginals",
                       styles={"true marginal": "#999999"}), path)
    files.append(path)
    summary = {
        "figure": fig_id,
        "kind": kind.value,
        "n": n,
        "seed": seed,
        "amari": amari(result.best.W, W0),
        "loglik": result.best.loglik,
        "files": [str(f) for f in files],
    }
    return summary


def comparison_figure(outdir, reps=200, n=200, seed=0, config=None, with_baseline=False, threads=1,
                      fig_id="fig7"):
    """Amari boxplots over replications for every source kind."""
    config = config or FitConfig()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = []
    for kind in SourceKind:
        spec = ExperimentSpec(kind, n=n, reps=reps, seed=seed)
        records.extend(run_experiment(spec, config, with_baseline=with_baseline, threads=threads))
    csv_path = outdir / f"{fig_id}.csv"
    csv_path.write_text(records_to_csv(records))
    series = {}
    for kind in SourceKind:
        rows = [r for r in records if r["kind"] == kind.value]
        series[kind.value] = [r["amari_lcica"] for r in rows]
        if with_baseline:
            series[f"{kind.value} (kurtosis baseline)"] = [r["amari_baseline"] for r in rows]
    svg_path = outdir / f"{fig_id}_amari.svg"
    emit_plot(PlotSpec(PlotKind.BOXPLOT, series, "source distribution", "Amari metric",
                       "Amari metric to the true unmixing matrix"), svg_path)
    return {"figure": fig_id, "reps": reps, "n": n, "seed": seed, "files": [str(csv_path), str(svg_path)]}


def reproduce(fig_id, outdir, reps=200, n=200, seed=0, config=None, with_baseline=False, threads=1):
    if fig_id in FIGURES:
        return reconstruction_figure(fig_id, outdir, n=n, seed=seed, config=config)
    if fig_id in ("fig6", "fig7"):
        return comparison_figure(outdir, reps=reps, n=n, seed=seed, config=config,
                                 with_baseline=with_baseline, threads=threads, fig_id=fig_id)
    raise ValueError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURE_IDS)}")

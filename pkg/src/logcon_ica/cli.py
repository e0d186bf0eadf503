"""Command-line interface: ``logcon-ica <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import emplik
from .exceptions import LogconIcaError
from .ica import FitConfig, fit, resolve_threads
from .io import load_model, read_dataset, save_model, write_dataset, write_json
from .metrics import align, amari
from .plotting import PlotKind, PlotSpec, density_curve, emit_plot
from .reproduce import FIGURE_IDS, reproduce
from .sim import ExperimentSpec, SourceKind, generate, mixing_matrix

logger = logging.getLogger("logcon_ica")

KINDS = [k.value for k in SourceKind]


class UsageError(Exception):
    pass


def _fit_config(args):
    return FitConfig(
        restarts=args.restarts,
        eta=args.eta,
        alpha=args.alpha,
        gamma=args.gamma,
        max_outer_iters=args.max_iters,
        seed=args.seed,
        threads=resolve_threads(args.threads),
    )


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")


def _add_fit_options(p):
    p.add_argument("--restarts", type=int, default=10, help="random starting rotations (default: 10)")
    p.add_argument("--eta", type=float, default=1e-7, help="relative-improvement stopping threshold (default: 1e-7)")
    p.add_argument("--alpha", type=float, default=0.3, help="line-search sufficient-increase constant (default: 0.3)")
    p.add_argument("--gamma", type=float, default=0.5, help="line-search shrink factor (default: 0.5)")
    p.add_argument("--max-iters", type=int, default=500, help="cap on outer iterations per restart (default: 500)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes; falls back to $LOGCON_ICA_THREADS, then 1")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="logcon-ica",
        description="ICA by nonparametric maximum likelihood with log-concave marginals.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="draw signals and rotated observations for a preset")
    p.add_argument("--kind", choices=KINDS, required=True, help="source distribution")
    p.add_argument("--n", type=int, default=200, help="number of observations (default: 200)")
    p.add_argument("--output", required=True, help="directory for signals.csv and observations.csv")
    _add_common(p)

    p = sub.add_parser("fit", help="fit a model to a CSV of observations")
    p.add_argument("--input", required=True, help="CSV file, one observation per row")
    p.add_argument("--output", default="model.json", help="model JSON path (default: model.json)")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--no-plots", action="store_true", help="do not write the density plot")
    _add_fit_options(p)
    _add_common(p)

    p = sub.add_parser("eval", help="compare a fitted model with the true unmixing matrix")
    p.add_argument("--input", required=True, help="model JSON written by 'fit'")
    truth = p.add_mutually_exclusive_group(required=True)
    truth.add_argument("--truth", help="CSV holding the true d x d unmixing matrix")
    truth.add_argument("--kind", choices=KINDS, help="use the simulation preset truth for this source kind")
    _add_common(p)

    p = sub.add_parser("reproduce", help="run a figure preset end to end")
    p.add_argument("figure", choices=FIGURE_IDS, help="figure to reproduce")
    p.add_argument("--reps", type=int, default=200, help="replications for fig6/fig7 (default: 200)")
    p.add_argument("--n", type=int, default=200, help="observations per replication (default: 200)")
    p.add_argument("--output", default=".", help="output directory (default: current directory)")
    p.add_argument("--with-baseline", action="store_true", help="also fit the kurtosis baseline")
    _add_fit_options(p)
    _add_common(p)

    p = sub.add_parser("demo-emplik", help="show that empirical likelihood has many maximisers")
    p.add_argument("--n", type=int, default=50, help="number of observations (default: 50)")
    p.add_argument("--subsets", type=int, default=10, help="index subsets to report (default: 10)")
    p.add_argument("--min-separation", type=float, default=0.1,
                   help="keep a random subset only if its unmixer is this far (Amari) from those kept "
                        "so far; 0 reports the first random draws (default: 0.1)")
    p.add_argument("--output", default=None, help="write the JSON report here instead of stdout")
    _add_common(p)
    return parser


def _check_paths(args):
    if getattr(args, "input", None) is not None and not Path(args.input).is_file():
        raise UsageError(f"input file not found: {args.input}")
    if getattr(args, "truth", None) is not None and not Path(args.truth).is_file():
        raise UsageError(f"truth file not found: {args.truth}")
    out = getattr(args, "output", None)
    if out is not None and args.command == "fit":
        parent = Path(out).resolve().parent
        if not parent.is_dir():
            raise UsageError(f"output directory does not exist: {parent}")


def cmd_simulate(args):
    spec = ExperimentSpec(args.kind, n=args.n, reps=1, seed=args.seed)
    S, X = generate(spec, np.random.default_rng(np.random.SeedSequence(args.seed)))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "signals.csv", S)
    write_dataset(out / "observations.csv", X)
    print(json.dumps({"signals": str(out / "signals.csv"), "observations": str(out / "observations.csv")}))


def cmd_fit(args):
    X = read_dataset(args.input, header=args.header)
    result = fit(X, _fit_config(args))
    save_model(args.output, result)
    report = {
        "model": args.output,
        "loglik": result.best.loglik,
        "best_restart": result.best_index,
        "converged": result.converged,
    }
    if not args.no_plots:
        plot = Path(args.output).with_suffix("").as_posix() + "_densities.svg"
        series = {f"marginal {j + 1}": density_curve(f) for j, f in enumerate(result.best.densities)}
        emit_plot(PlotSpec(PlotKind.DENSITY_OVERLAY, series, "w_j . x", "density", "fitted marginals"), plot)
        report["plot"] = plot
    print(json.dumps(report))


def cmd_eval(args):
    model = load_model(args.input)
    if args.kind:
        kind = SourceKind.parse(args.kind)
        W0 = np.linalg.inv(mixing_matrix())
        refs = [kind.reference_density()] * W0.shape[0]
    else:
        W0 = read_dataset(args.truth)
        refs = None
    if W0.shape != model.W.shape:
        raise ValueError(f"truth has shape {W0.shape}, model has {model.W.shape}")
    alignment = align(model, W0, refs)
    print(json.dumps({"amari": amari(model.W, W0), "loglik": model.loglik, **alignment.to_dict()}))


def cmd_reproduce(args):
    config = _fit_config(args)
    summary = reproduce(args.figure, args.output, reps=args.reps, n=args.n, seed=args.seed,
                        config=config, with_baseline=args.with_baseline, threads=config.threads)
    print(json.dumps(summary))


def cmd_demo_emplik(args):
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    X = rng.standard_normal((args.n, 2))
    if args.min_separation > 0:
        subsets, examined = emplik.separated_subsets(X, args.subsets, args.min_separation, rng)
    else:
        subsets = emplik.random_subsets(args.n, 2, args.subsets, rng)
        examined = len(subsets)
    report = emplik.demo_report(X, subsets)
    report["seed"] = args.seed
    report["candidates_examined"] = examined
    if args.output:
        write_json(args.output, report)
    print(json.dumps(report if not args.output else {"report": args.output,
                                                    "min_pairwise_amari": report["min_pairwise_amari"]}))


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "reproduce": cmd_reproduce,
    "demo-emplik": cmd_demo_emplik,
}


def _report_error(exc, code, as_json):
    if as_json:
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"logcon-ica: error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json-errors" in argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        if code != 0 and as_json:
            print(json.dumps({"error": "UsageError", "message": "invalid arguments", "exit_code": code}),
                  file=sys.stderr)
        return code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _check_paths(args)
    except UsageError as exc:
        return _report_error(exc, 2, as_json)
    try:
        COMMANDS[args.command](args)
    except (LogconIcaError, ValueError, OSError) as exc:
        return _report_error(exc, 1, as_json)
    return 0


if __name__ == "__main__":
    sys.exit(main())

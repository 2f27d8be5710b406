"""Command-line entry point: ``extremeabc <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 bad input data, 4 numerical failure.
"""
import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import _backend, streams
from ..abc import PriorSpec, abc_adaptive, abc_rejection, credible_band, posterior_mean_curve
from ..corrfuncs import CorrelationModel, Family
from ..design import MarginScale, SpatialDesign
from ..errors import ExtremeABCError, ParameterDomainError, SchemaError
from ..margins import fit_panel, negate, to_unit_frechet
from ..maxstable import DEFAULT_TRUNCATION_BOUND, simulate_schlather
from ..mcle import mcle_fit
from ..summaries import Summarizer, curve_grid
from . import io
from .config import load_config
from .evaluation import mse_curve
from .exposure import predict_exposure
from .study import run_simulation_study

log = logging.getLogger("extremeabc")

FAMILIES = [f.value for f in Family]
METHODS = ["madogram", "pairwise", "triplet"]


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default if suppress else 0,
                        help="master random seed (default 0)")
    parser.add_argument("--threads", type=int, default=default if suppress else 1,
                        help="worker threads (results do not depend on this)")
    parser.add_argument("--output", type=Path, default=default if suppress else Path("."),
                        help="output directory (default: current directory)")
    parser.add_argument("--verbose", "-v", action="count", default=default if suppress else 0)


def _family(p):
    p.add_argument("--family", choices=FAMILIES, default="whittle-matern")


def _abc_args(p, adaptive):
    p.add_argument("--sites", type=Path, required=True)
    p.add_argument("--panel", type=Path, required=True, help="unit-Frechet panel CSV")
    _family(p)
    p.add_argument("--method", choices=METHODS, default="triplet")
    p.add_argument("--clusters", type=int, default=50, help="K for the triplet method")
    p.add_argument("--iterations", type=int, default=20_000)
    if adaptive:
        p.add_argument("--stage2-iterations", type=int, default=20_000)
    p.add_argument("--percentile", type=float, default=0.005)
    p.add_argument("--prior", default="c2=0:10,nu=0:10")
    p.add_argument("--truncation-bound", type=float, default=DEFAULT_TRUNCATION_BOUND)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(
        prog="extremeabc",
        description="Likelihood-free inference for Schlather max-stable fields.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a unit-Frechet panel")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sites", type=Path, help="sites CSV (id,x,y)")
    g.add_argument("--n-sites", type=int, help="draw this many sites uniformly on a square")
    p.add_argument("--side", type=float, default=10.0)
    _family(p)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--blocks", type=int, default=100)
    p.add_argument("--truncation-bound", type=float, default=DEFAULT_TRUNCATION_BOUND)

    p = sub.add_parser("transform", parents=[common],
                       help="fit GEV margins per site and transform to unit-Frechet")
    p.add_argument("--sites", type=Path, required=True)
    p.add_argument("--panel", type=Path, required=True, help="raw block maxima (or minima)")
    p.add_argument("--minima", action="store_true", help="data are block minima; negate on ingest")

    p = sub.add_parser("summarize", parents=[common], help="compute a summary statistic")
    p.add_argument("--sites", type=Path, required=True)
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--method", choices=METHODS, default="triplet")
    p.add_argument("--clusters", type=int, default=50)
    _family(p)

    _abc_args(sub.add_parser("abc", parents=[common], help="rejection ABC"), adaptive=False)
    _abc_args(sub.add_parser("aabc", parents=[common], help="two-stage adaptive ABC"),
              adaptive=True)

    p = sub.add_parser("mcle", parents=[common], help="pairwise composite likelihood fit")
    p.add_argument("--sites", type=Path, required=True)
    p.add_argument("--panel", type=Path, required=True)
    _family(p)

    p = sub.add_parser("evaluate", parents=[common],
                       help="integrated squared error of an estimate against a known truth")
    _family(p)
    p.add_argument("--c2", type=float, required=True, help="true range")
    p.add_argument("--nu", type=float, required=True, help="true smoothness")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--posterior", type=Path, help="posterior CSV from abc/aabc")
    g.add_argument("--mcle", type=Path, help="fit CSV from mcle")
    p.add_argument("--sites", type=Path, help="cap the integration range at the design diameter")

    p = sub.add_parser("study", parents=[common], help="run a simulation study from TOML")
    p.add_argument("--config", type=Path, required=True)

    p = sub.add_parser("predict", parents=[common], help="posterior-predictive exposure")
    p.add_argument("--posterior", type=Path, required=True)
    p.add_argument("--sites", type=Path, required=True, help="target sites")
    p.add_argument("--fits", type=Path, required=True, help="per-site GEV parameters CSV")
    p.add_argument("--weights", type=Path, help="id,weight CSV (default: all 1)")
    p.add_argument("--thresholds", required=True, help="comma-separated thresholds")
    p.add_argument("--sims", type=int, default=1000)
    p.add_argument("--minima", action="store_true")
    return parser


def _out(args, name):
    args.output.mkdir(parents=True, exist_ok=True)
    return args.output / name


def _frechet_panel(args, design):
    panel = io.load_panel(args.panel, design)
    panel.require(MarginScale.UNIT_FRECHET)
    return panel


def cmd_simulate(args):
    if args.sites:
        design = io.load_sites(args.sites)
    else:
        design = SpatialDesign.uniform_square(args.n_sites, streams.generator(args.seed, 0), args.side)
        io.save_sites(design, _out(args, "sites.csv"))
    model = CorrelationModel(args.family, args.c2, args.nu)
    panel = simulate_schlather(design, model, args.blocks, args.seed, args.truncation_bound)
    io.save_panel(panel, _out(args, "panel.csv"))
    print(f"wrote {panel.n_blocks} x {design.D} panel to {_out(args, 'panel.csv')}")


def cmd_transform(args):
    design = io.load_sites(args.sites)
    raw = io.load_panel(args.panel, design, MarginScale.RAW)
    if args.minima:
        raw = negate(raw)
    fits = fit_panel(raw)
    io.save_fits(design, fits, _out(args, "fits.csv"))
    frechet = to_unit_frechet(raw, fits)
    frechet.meta["negated"] = bool(args.minima)
    io.save_panel(frechet, _out(args, "frechet.csv"))
    bad = [sid for sid, f in zip(design.ids, fits) if not f.converged]
    if bad:
        log.warning("GEV fit did not report convergence at: %s", ", ".join(bad))
    print(f"fitted {len(fits)} sites; wrote fits.csv and frechet.csv to {args.output}")


def cmd_summarize(args):
    design = io.load_sites(args.sites)
    panel = _frechet_panel(args, design)
    summarizer = Summarizer(args.method, design, family=args.family, K=args.clusters)
    summary = summarizer(panel)
    if summary.is_curve:
        io.save_curve_summary(summary, _out(args, "summary.csv"))
        print(f"fitted c2={summary.phi.c2:.6g} nu={summary.phi.nu:.6g}")
    else:
        io.save_clustering(summarizer.clustering, _out(args, "clustering.csv"))
        io.save_cluster_summary(summary, _out(args, "summary.csv"))
        print(f"{summary.values.size} cluster means written to {_out(args, 'summary.csv')}")


def _posterior_outputs(args, sample, design):
    io.save_posterior(sample, _out(args, "posterior.csv"))
    grid = curve_grid(design)
    mean = posterior_mean_curve(sample, grid)
    cols = [grid, mean]
    header = ["h", "mean"]
    try:
        lo, hi = credible_band(sample, grid)
        cols += [lo, hi]
        header += ["lower95", "upper95"]
    except ParameterDomainError as exc:
        log.warning("no credible band: %s", exc)
    with _out(args, "posterior_curve.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([io.FLOAT_FORMAT % v for v in row])
    m = sample.mean_phi
    print(f"{len(sample)} particles, epsilon={sample.epsilon:.6g}, "
          f"posterior mean c2={m.c2:.4g} nu={m.nu:.4g}")


def _abc_setup(args):
    design = io.load_sites(args.sites)
    panel = _frechet_panel(args, design)
    summarizer = Summarizer(args.method, design, family=args.family, K=args.clusters)
    prior = PriorSpec.parse(args.prior, args.family)
    return design, summarizer, summarizer(panel), prior, panel.n_blocks


def cmd_abc(args):
    design, summarizer, observed, prior, n = _abc_setup(args)
    sample = abc_rejection(observed, design, n, prior, args.iterations, args.percentile,
                           args.seed, args.family, args.threads, summarizer, args.truncation_bound)
    _posterior_outputs(args, sample, design)


def cmd_aabc(args):
    design, summarizer, observed, prior, n = _abc_setup(args)
    sample = abc_adaptive(observed, design, n, prior, args.iterations, args.stage2_iterations,
                          args.percentile, args.seed, args.family, args.threads, summarizer,
                          args.truncation_bound)
    _posterior_outputs(args, sample, design)


def cmd_mcle(args):
    design = io.load_sites(args.sites)
    fit = mcle_fit(_frechet_panel(args, design), args.family)
    io.save_mcle(fit, _out(args, "mcle.csv"))
    print(f"c2={fit.phi_hat.c2:.6g} nu={fit.phi_hat.nu:.6g} loglik={fit.loglik:.6g} "
          f"converged={fit.converged}")


def _read_mcle(path, family):
    rows = io._read_rows(path)
    if rows[0] != ["c2", "nu", "loglik", "converged"] or len(rows) < 2:
        raise SchemaError(f"{path}: expected header c2,nu,loglik,converged and one row")
    return CorrelationModel(family, io._float(rows[1][0], 1, "c2", path),
                            io._float(rows[1][1], 1, "nu", path))


def cmd_evaluate(args):
    truth = CorrelationModel(args.family, args.c2, args.nu)
    diameter = io.load_sites(args.sites).diameter if args.sites else None
    if args.posterior:
        sample = io.load_posterior(args.posterior)
        curve = lambda h: posterior_mean_curve(sample, h)
    else:
        curve = _read_mcle(args.mcle, args.family)
    res = mse_curve(truth, curve, diameter)
    out = {"mse": res.mse, "upper": res.upper, "capped": res.capped}
    io.write_json(out, _out(args, "evaluation.json"))
    print(json.dumps(out))


def cmd_study(args):
    config = load_config(args.config)
    if args.seed_given:
        config = config.with_overrides(seed=args.seed)
    report = run_simulation_study(
        config, threads=args.threads,
        progress=lambda r: log.info("%s rep %d %s: %s", r["model"], r["replicate"],
                                    r["estimator"], r["mse"]))
    io.write_json(report.as_dict(), _out(args, "study.json"))
    with _out(args, "study_summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "estimator", "mean_mse", "se", "runs", "failures"])
        for r in report.summary:
            w.writerow([r["model"], r["estimator"], r["mean_mse"], r["se"], r["runs"], r["failures"]])
    for r in report.summary:
        mean = "nan" if r["mean_mse"] is None else f"{r['mean_mse']:.4g}"
        print(f"{r['model']:>6} {r['estimator']:>9} mean MSE {mean} ({r['runs']} runs)")


def cmd_predict(args):
    design = io.load_sites(args.sites)
    sample = io.load_posterior(args.posterior)
    margins = io.load_fits(args.fits, design)
    weights = io.load_weights(args.weights, design) if args.weights else np.ones(design.D)
    try:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    except ValueError:
        raise ParameterDomainError(f"cannot parse thresholds {args.thresholds!r}") from None
    report = predict_exposure(sample, design, margins, weights, thresholds, args.sims,
                              args.minima, args.seed)
    with _out(args, "exposure.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["simulation", *(f"total@{t:g}" for t in report.thresholds)])
        for s, row in enumerate(report.totals):
            w.writerow([s, *(io.FLOAT_FORMAT % v for v in row)])
    frac = report.intermediate_fraction()
    io.write_json({"thresholds": report.thresholds, "intermediate_fraction": frac,
                   "mean_total": report.totals.mean(axis=0), "total_weight": report.total_weight,
                   "n_sims": report.n_sims, "minima": report.minima,
                   "failed_sites": report.failed_sites}, _out(args, "exposure.json"))
    for t, f in zip(report.thresholds, frac):
        print(f"threshold {t:g}: intermediate exposure in {100 * f:.1f}% of simulations")


COMMANDS = {
    "simulate": cmd_simulate, "transform": cmd_transform, "summarize": cmd_summarize,
    "abc": cmd_abc, "aabc": cmd_aabc, "mcle": cmd_mcle, "evaluate": cmd_evaluate,
    "study": cmd_study, "predict": cmd_predict,
}


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", _backend.NAME)
    try:
        COMMANDS[args.command](args)
    except ExtremeABCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

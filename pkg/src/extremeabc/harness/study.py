"""Simulation study: simulate data from known models, estimate, score by MSE."""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .. import streams
from ..abc import (PriorSpec, abc_adaptive, abc_rejection, credible_band, min_band_particles,
                   posterior_mean_curve)
from ..design import SpatialDesign
from ..errors import ExtremeABCError
from ..maxstable import simulate_schlather
from ..mcle import mcle_fit
from ..summaries import Summarizer, ward_cluster
from .config import ESTIMATORS
from .evaluation import band_coverage, mse_curve

BAND_LEVEL = 0.95

log = logging.getLogger(__name__)

_DESIGN, _DATA = 0, 1


@dataclass
class StudyReport:
    rows: list
    summary: list = field(default_factory=list)

    def as_dict(self):
        return {"rows": self.rows, "summary": self.summary}


def replicate_design(config, model_index, replicate):
    gen = streams.generator(config.seed, model_index, replicate, _DESIGN)
    return SpatialDesign.uniform_square(config.sites, gen, config.side)


def _estimate(name, spec, panel, design, config, seed, threads, clustering):
    """Return (estimated curve, band or None, extra row fields)."""
    family = spec.family
    if name == "mcle":
        fit = mcle_fit(panel, family, n_grid=config.mcle.grid, n_starts=config.mcle.starts)
        return fit.model, None, {"c2": fit.phi_hat.c2, "nu": fit.phi_hat.nu, "converged": fit.converged}
    abc = config.abc
    prior = PriorSpec.parse(abc.prior, family)
    method = "triplet" if name == "aabc" else name
    summarizer = Summarizer(method, design, family=family, clustering=clustering)
    observed = summarizer(panel)
    if name == "aabc":
        sample = abc_adaptive(observed, design, config.n_blocks, prior, abc.iterations,
                              abc.stage2_iterations, abc.percentile, seed, family, threads,
                              summarizer, abc.truncation_bound)
    else:
        sample = abc_rejection(observed, design, config.n_blocks, prior, abc.iterations,
                               abc.percentile, seed, family, threads, summarizer,
                               abc.truncation_bound)
    mean = sample.mean_phi
    band = None
    if len(sample) >= min_band_particles(BAND_LEVEL):
        band = lambda h: credible_band(sample, h, BAND_LEVEL)
    return (lambda h: posterior_mean_curve(sample, h), band,
            {"c2": float(mean.c2), "nu": float(mean.nu), "epsilon": sample.epsilon,
             "particles": len(sample)})


def run_simulation_study(config, threads=1, progress=None):
    """Run every model x replicate x estimator and score each with ``mse_curve``.

    All estimators of one replicate share the site design and the simulated
    panel. Failures are recorded in the row and the study continues. The
    report holds no timings, so equal configs give equal reports.
    """
    rows = []
    for mi, spec in enumerate(config.models):
        for rep in range(config.replicates):
            design = replicate_design(config, mi, rep)
            panel = simulate_schlather(design, spec.model, config.n_blocks,
                                       (config.seed, mi, rep, _DATA), config.abc.truncation_bound)
            clustering = None
            if {"triplet", "aabc"} & set(config.estimators):
                clustering = ward_cluster(design, min(config.abc.clusters, math.comb(design.D, 3)))
            for name in config.estimators:
                seed = (config.seed, mi, rep, 2 + ESTIMATORS.index(name))
                row = {"model": spec.label, "replicate": rep, "estimator": name}
                try:
                    curve, band, extra = _estimate(name, spec, panel, design, config, seed,
                                                   threads, clustering)
                    res = mse_curve(spec.model, curve, design.diameter)
                    row.update(mse=res.mse, upper=res.upper, capped=res.capped, error=None, **extra)
                    if band is not None:
                        row["coverage"] = band_coverage(spec.model, band, res.upper)
                except ExtremeABCError as exc:
                    log.warning("model %s replicate %d %s failed: %s", spec.label, rep, name, exc)
                    row.update(mse=None, error=f"{type(exc).__name__}: {exc}")
                rows.append(row)
                if progress:
                    progress(row)
    return StudyReport(rows, summarize_rows(rows, config))


def summarize_rows(rows, config):
    """Per model and estimator: mean MSE and standard error of the mean."""
    out = []
    for spec in config.models:
        for name in config.estimators:
            vals = [r["mse"] for r in rows
                    if r["model"] == spec.label and r["estimator"] == name and r["mse"] is not None]
            n = len(vals)
            mean = float(np.mean(vals)) if n else None
            se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else None
            out.append({"model": spec.label, "estimator": name, "mean_mse": mean, "se": se,
                        "runs": n, "failures": config.replicates - n})
    return out

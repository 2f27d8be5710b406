"""Rejection ABC and two-stage adaptive ABC over the correlation parameters.

Each iteration draws a parameter, simulates a Schlather panel at the observed
design, summarizes it and records its distance to the observed summary. The
random streams for iteration ``i`` are addressed by ``(seed, stage, i,
attempt)`` so the result does not depend on how iterations are spread over
worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
import time
import warnings

import numpy as np
from scipy.special import logsumexp

from . import streams
from .corrfuncs import CorrelationModel, Family, ParamPoint, correlation_curves
from .errors import (FactorizationError, FeasibilityError, ParameterDomainError,
                     SimulationBudgetError)
from .maxstable import (DEFAULT_TRUNCATION_BOUND, correlation_matrix, field_factor,
                        simulate_values)
from .summaries import Summarizer

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 5
MAX_PROPOSALS = 100_000
OMEGA_JITTER = 1e-8
_CHUNK = 256


class Stage(str, Enum):
    REJECTION = "rejection"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors on ``c2`` and ``nu``; draws land in (low, high]."""

    c2: tuple = (0.0, 10.0)
    nu: tuple = (0.0, 10.0)

    def __post_init__(self):
        for name in ("c2", "nu"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 <= lo < hi):
                raise ParameterDomainError(f"prior bounds for {name} must satisfy 0 <= low < high")
            object.__setattr__(self, name, (lo, hi))

    @classmethod
    def for_family(cls, family, c2=(0.0, 10.0), nu=(0.0, 10.0)):
        """Prior whose smoothness support is clipped to the family's valid range."""
        family = Family.parse(family)
        lo, hi = nu
        hi = min(float(hi), family.max_nu)
        if lo >= hi:
            raise ParameterDomainError(f"smoothness prior is empty for {family.value}")
        return cls(tuple(c2), (lo, hi))

    @classmethod
    def parse(cls, text, family=Family.WHITTLE_MATERN):
        """Parse ``c2=0:10,nu=0:10``."""
        bounds = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            try:
                key, rng = part.split("=")
                lo, hi = rng.split(":")
                bounds[key.strip()] = (float(lo), float(hi))
            except ValueError:
                raise ParameterDomainError(f"cannot parse prior term {part!r}") from None
        unknown = set(bounds) - {"c2", "nu"}
        if unknown:
            raise ParameterDomainError(f"unknown prior parameter(s): {', '.join(sorted(unknown))}")
        return cls.for_family(family, bounds.get("c2", (0.0, 10.0)), bounds.get("nu", (0.0, 10.0)))

    @property
    def low(self):
        return np.array([self.c2[0], self.nu[0]])

    @property
    def high(self):
        return np.array([self.c2[1], self.nu[1]])

    @property
    def mean(self):
        return (self.low + self.high) / 2

    def contains(self, phi):
        phi = np.asarray(phi, dtype=float)
        return bool(np.all((phi > self.low) & (phi <= self.high)))

    def sample(self, gen, size=None):
        u = gen.random(2 if size is None else (size, 2))
        return self.high - (self.high - self.low) * u

    def check_family(self, family):
        if self.nu[1] > Family.parse(family).max_nu:
            raise ParameterDomainError(
                f"prior for nu exceeds {Family.parse(family).max_nu} for {Family.parse(family).value}")


@dataclass(frozen=True)
class AbcCandidate:
    phi: ParamPoint
    distance: float
    weight: float = 1.0
    index: int = -1


@dataclass(eq=False)
class PosteriorSample:
    """Accepted particles stored column-wise.

    ``phi`` has shape (M, 2) with columns (c2, nu); ``weights`` sum to one.
    """

    phi: np.ndarray
    distances: np.ndarray
    weights: np.ndarray
    epsilon: float
    percentile: float
    stage: Stage
    family: Family
    indices: np.ndarray = None
    provenance: dict = field(default_factory=dict)
    stage1: "PosteriorSample" = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float).reshape(-1, 2)
        self.distances = np.asarray(self.distances, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.stage = Stage(self.stage)
        self.family = Family.parse(self.family)
        m = self.phi.shape[0]
        if m == 0:
            raise ParameterDomainError("a posterior sample needs at least one particle")
        if self.distances.shape != (m,) or self.weights.shape != (m,):
            raise ParameterDomainError("particle arrays have inconsistent lengths")
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ParameterDomainError("weights must be finite and non-negative")
        if self.indices is None:
            self.indices = np.arange(m)

    def __len__(self):
        return self.phi.shape[0]

    @property
    def particles(self):
        return [AbcCandidate(ParamPoint(float(c), float(n)), float(d), float(w), int(i))
                for (c, n), d, w, i in zip(self.phi, self.distances, self.weights, self.indices)]

    @property
    def mean_phi(self):
        return ParamPoint(*(self.weights @ self.phi))


@dataclass(eq=False)
class CandidateSet:
    """Every candidate of one ABC stage, in iteration order."""

    phi: np.ndarray
    distances: np.ndarray
    attempts: np.ndarray


def accepted_count(percentile, iterations):
    # the small offset keeps 0.02 * 10_000 from rounding up to 201
    return max(1, math.ceil(percentile * iterations - 1e-9))


def select_closest(distances, count):
    """Indices of the ``count`` smallest distances, ties broken by index."""
    order = np.lexsort((np.arange(distances.size), distances))
    return order[:count]


def _check_run(iterations, percentile, minimum):
    if int(iterations) < minimum:
        raise ParameterDomainError(f"at least {minimum} iterations are required, got {iterations}")
    if not 0.0 < percentile <= 1.0:
        raise ParameterDomainError(f"percentile must lie in (0, 1], got {percentile}")


class _Simulator:
    """Shared per-run state: design, summarizer and the observed summary."""

    def __init__(self, observed, design, n_blocks, family, summarizer, truncation_bound):
        if n_blocks < 1:
            raise ParameterDomainError("n_blocks must be at least 1")
        self.observed = observed
        self.design = design
        self.n_blocks = int(n_blocks)
        self.family = Family.parse(family)
        self.summarizer = summarizer or Summarizer.for_summary(observed, design)
        self.summarizer.check_compatible(observed)
        self.bound = float(truncation_bound)

    def distance(self, phi, path):
        model = CorrelationModel(self.family, float(phi[0]), float(phi[1]))
        factor = field_factor(correlation_matrix(self.design, model))
        z = simulate_values(factor, self.n_blocks, path, self.bound)
        return self.summarizer.distance(self.observed, self.summarizer.values(z))


def _run_stage(sim, n, propose, path, threads):
    """Evaluate ``n`` iterations; ``propose(i, attempt)`` returns a parameter."""

    def one(i):
        for attempt in range(MAX_ATTEMPTS):
            phi = propose(i, attempt)
            try:
                return phi, sim.distance(phi, (*path, i, attempt)), attempt
            except (SimulationBudgetError, FactorizationError) as exc:
                log.warning("iteration %d attempt %d failed (%s); redrawing", i, attempt, exc)
        raise SimulationBudgetError(f"iteration {i} failed {MAX_ATTEMPTS} times in a row")

    def chunk(lo):
        return [one(i) for i in range(lo, min(lo + _CHUNK, n))]

    starts = range(0, n, _CHUNK)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    rows = [r for part in parts for r in part]
    return CandidateSet(np.array([r[0] for r in rows], dtype=float).reshape(-1, 2),
                        np.array([r[1] for r in rows], dtype=float),
                        np.array([r[2] for r in rows], dtype=np.intp))


def _filter(cands, percentile, iterations):
    keep = select_closest(cands.distances, accepted_count(percentile, iterations))
    return keep, float(cands.distances[keep].max())


def _provenance(seed, iterations, sim, percentile, extra=None):
    out = {
        "seed": list(streams.as_path(seed)),
        "iterations": int(iterations),
        "percentile": float(percentile),
        "method": sim.summarizer.method.value,
        "family": sim.family.value,
        "n_blocks": sim.n_blocks,
        "truncation_bound": sim.bound,
    }
    if sim.summarizer.clustering is not None:
        out["clusters"] = int(sim.summarizer.clustering.K)
    out.update(extra or {})
    return out


def abc_rejection(observed, design, n_blocks, prior=None, iterations=20_000, percentile=0.005,
                  seed=0, family=Family.WHITTLE_MATERN, threads=1, summarizer=None,
                  truncation_bound=DEFAULT_TRUNCATION_BOUND, keep_candidates=False):
    """Rejection ABC keeping the ``ceil(percentile * iterations)`` closest draws.

    ``observed`` must come from the same summary configuration as
    ``summarizer`` (by default one is rebuilt from ``observed``).
    """
    _check_run(iterations, percentile, 100)
    family = Family.parse(family)
    prior = prior or PriorSpec.for_family(family)
    prior.check_family(family)
    sim = _Simulator(observed, design, n_blocks, family, summarizer, truncation_bound)
    base = streams.as_path(seed)
    started = time.perf_counter()

    def propose(i, attempt):
        return prior.sample(streams.generator(*base, 1, i, attempt, streams.PRIOR))

    cands = _run_stage(sim, int(iterations), propose, (*base, 1), threads)
    keep, eps = _filter(cands, percentile, iterations)
    m = keep.size
    out = PosteriorSample(cands.phi[keep], cands.distances[keep], np.full(m, 1.0 / m), eps,
                          float(percentile), Stage.REJECTION, family, indices=keep,
                          provenance=_provenance(seed, iterations, sim, percentile,
                                                 {"wall_time": time.perf_counter() - started}))
    if keep_candidates:
        out.provenance["candidates"] = cands
    return out


def mutation_covariance(phi):
    """Twice the empirical covariance of stage-1 particles, jittered if singular."""
    omega = 2.0 * np.atleast_2d(np.cov(np.asarray(phi, dtype=float), rowvar=False))
    try:
        np.linalg.cholesky(omega)
        if np.linalg.cond(omega) > 1e12:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        warnings.warn("stage-1 particles are degenerate; inflating the mutation covariance",
                      RuntimeWarning, stacklevel=2)
        omega = omega + OMEGA_JITTER * np.eye(omega.shape[0])
    return omega


def importance_weights(phi2, phi1, omega):
    """Normalized ``w_m`` proportional to ``1 / sum_j (1/J) N(phi2_m | phi1_j, omega)``."""
    phi2 = np.atleast_2d(np.asarray(phi2, dtype=float))
    phi1 = np.atleast_2d(np.asarray(phi1, dtype=float))
    L = np.linalg.cholesky(omega)
    diff = phi2[:, None, :] - phi1[None, :, :]
    sol = np.linalg.solve(L, diff.reshape(-1, diff.shape[-1]).T).T.reshape(diff.shape)
    log_norm = -0.5 * phi1.shape[1] * math.log(2 * math.pi) - np.log(np.diag(L)).sum()
    log_kernel = log_norm - 0.5 * (sol ** 2).sum(axis=-1)
    log_mix = logsumexp(log_kernel, axis=1) - math.log(phi1.shape[0])
    log_w = -log_mix
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def abc_adaptive(observed, design, n_blocks, prior=None, iterations1=20_000, iterations2=20_000,
                 percentile=0.005, seed=0, family=Family.WHITTLE_MATERN, threads=1,
                 summarizer=None, truncation_bound=DEFAULT_TRUNCATION_BOUND):
    """Two-stage adaptive ABC.

    Stage 1 is rejection ABC. Stage 2 resamples a stage-1 particle, mutates it
    with ``N(phi*, omega)`` where ``omega`` is twice the stage-1 covariance, and
    redraws the (resample, mutate) pair whenever the proposal leaves the prior
    box. Survivors are importance weighted against the mixture proposal.
    """
    _check_run(iterations1, percentile, 1000)
    _check_run(iterations2, percentile, 1000)
    family = Family.parse(family)
    prior = prior or PriorSpec.for_family(family)
    prior.check_family(family)
    sim = _Simulator(observed, design, n_blocks, family, summarizer, truncation_bound)
    started = time.perf_counter()
    stage1 = abc_rejection(observed, design, n_blocks, prior, iterations1, percentile, seed,
                           family, threads, sim.summarizer, truncation_bound)
    base = streams.as_path(seed)
    phi1 = stage1.phi
    J = phi1.shape[0]
    omega = mutation_covariance(phi1)
    chol = np.linalg.cholesky(omega)

    def propose(i, attempt):
        gen = streams.generator(*base, 2, i, attempt, streams.MUTATION)
        for _ in range(MAX_PROPOSALS):
            star = phi1[gen.integers(J)]
            phi = star + chol @ gen.standard_normal(2)
            if prior.contains(phi):
                return phi
        raise FeasibilityError("mutation kernel keeps proposing outside the prior support")

    cands = _run_stage(sim, int(iterations2), propose, (*base, 2), threads)
    keep, eps = _filter(cands, percentile, iterations2)
    phi2 = cands.phi[keep]
    weights = importance_weights(phi2, phi1, omega)
    prov = _provenance(seed, iterations2, sim, percentile, {
        "stage1_iterations": int(iterations1),
        "stage1_epsilon": stage1.epsilon,
        "omega": omega.tolist(),
        "wall_time": time.perf_counter() - started,
    })
    return PosteriorSample(phi2, cands.distances[keep], weights, eps, float(percentile),
                           Stage.ADAPTIVE, family, indices=keep, provenance=prov, stage1=stage1)


# ---------------------------------------------------------------- curves

def particle_curves(sample, grid, family=None):
    family = Family.parse(family or sample.family)
    return correlation_curves(family, sample.phi[:, 0], sample.phi[:, 1], grid)


def posterior_mean_curve(sample, grid, family=None):
    """Pointwise weighted mean of the particles' correlation curves."""
    if sample is None or len(sample) == 0:
        raise ParameterDomainError("posterior sample is empty")
    return sample.weights @ particle_curves(sample, grid, family)


def weighted_quantile(values, weights, q):
    """Smallest value whose cumulative weight reaches ``q``, column-wise.

    ``values`` has shape (M, G); returns shape (G,).
    """
    order = np.argsort(values, axis=0, kind="stable")
    v = np.take_along_axis(values, order, axis=0)
    cw = np.cumsum(weights[order], axis=0)
    cw /= cw[-1]
    idx = (cw < q - 1e-12).sum(axis=0)
    idx = np.minimum(idx, values.shape[0] - 1)
    return v[idx, np.arange(values.shape[1])]


def min_band_particles(level):
    return math.ceil(2.0 / (1.0 - level) - 1e-9)


def credible_band(sample, grid, level=0.95, family=None):
    """Pointwise weighted quantiles at (1 - level)/2 and (1 + level)/2."""
    if not 0.0 <= level < 1.0:
        raise ParameterDomainError("level must lie in [0, 1)")
    need = min_band_particles(level)
    if len(sample) < need:
        raise ParameterDomainError(
            f"a {level:.0%} band needs at least {need} particles, got {len(sample)}")
    curves = particle_curves(sample, grid, family)
    lower = weighted_quantile(curves, sample.weights, (1.0 - level) / 2)
    upper = weighted_quantile(curves, sample.weights, (1.0 + level) / 2)
    return lower, upper

"""Summary statistics for likelihood-free inference on max-stable data.

Three constructions are available:

* ``madogram``: per-pair madograms on unit-Gumbel margins, summarized by the
  least-squares curve ``log theta(h; phi)``;
* ``pairwise``: per-pair extremal coefficients on unit-Frechet margins,
  summarized by the least-squares curve ``theta(h; phi)``;
* ``triplet``: tripletwise extremal coefficients averaged within clusters of
  similarly shaped triangles.
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from math import comb

import numpy as np
from scipy.optimize import minimize

from . import _backend
from .corrfuncs import Family, ParamPoint, correlation_curves
from .design import BlockMaximaPanel, MarginScale
from .errors import (DesignError, FeasibilityError, FitError, ParameterDomainError,
                     SchemaError)

GRID_POINTS = 200
MAX_CLUSTER_SITES = 25

# Box for least-squares curve fits; the correlation is valid everywhere inside.
C2_BOUNDS = (1e-3, 100.0)
NU_BOUNDS = (1e-2, 20.0)


class SummaryMethod(str, Enum):
    MADOGRAM = "madogram"
    PAIRWISE = "pairwise"
    TRIPLET = "triplet"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterDomainError(f"unknown summary method {value!r}") from None


@dataclass(eq=False)
class SummaryVector:
    """A summary statistic tagged with the method that produced it.

    Curve methods carry the fitted ``phi`` and the implied curve on ``grid``;
    the triplet method carries the K cluster means in ``values``.
    """

    method: SummaryMethod
    values: np.ndarray
    grid: np.ndarray = None
    phi: ParamPoint = None
    family: Family = None
    clustering: "TripletClustering" = None
    meta: dict = field(default_factory=dict)

    @property
    def is_curve(self):
        return self.method is not SummaryMethod.TRIPLET


# ---------------------------------------------------------------- estimators

def _pair_index(panel, pair):
    j, k = (int(p) for p in pair)
    D = panel.design.D
    if not (0 <= j < D and 0 <= k < D):
        raise ParameterDomainError(f"site index out of range in {pair}")
    return j, k


def madogram_estimate(panel, pair):
    """(1/2n) sum_i |z_i(x_j) - z_i(x_k)| on unit-Gumbel margins."""
    panel.require(MarginScale.UNIT_GUMBEL)
    j, k = _pair_index(panel, pair)
    v = panel.values
    return float(np.abs(v[:, j] - v[:, k]).sum() / (2 * panel.n_blocks))


def madograms(gumbel_values, pairs):
    g = np.asarray(gumbel_values, dtype=float)
    return np.abs(g[:, pairs[:, 0]] - g[:, pairs[:, 1]]).sum(axis=0) / (2 * g.shape[0])


def _frechet_values(panel):
    panel.require(MarginScale.UNIT_FRECHET)
    if not np.all(panel.values > 0):
        raise ParameterDomainError("unit-Frechet values must be positive")
    return np.ascontiguousarray(panel.values)


def pairwise_theta_hat(panel, pair):
    """n / sum_i 1/max(z_i(x_j), z_i(x_k)); not clamped to [1, 2]."""
    z = _frechet_values(panel)
    j, k = _pair_index(panel, pair)
    return float(_backend.impl.pair_theta(z, np.array([[j, k]], dtype=np.intp))[0])


def triplet_theta_hat(panel, triplet):
    """n / sum_i 1/max over the three sites; not clamped to [1, 3]."""
    z = _frechet_values(panel)
    j, k = _pair_index(panel, triplet[:2])
    _, l = _pair_index(panel, triplet[1:])
    return float(_backend.impl.triplet_theta(z, np.array([[j, k, l]], dtype=np.intp))[0])


# ---------------------------------------------------------------- triangles

def _check_sides(sides):
    s = np.asarray(sides, dtype=float)
    if s.shape[-1] != 3 or np.any(~(s > 0)):
        raise ParameterDomainError("triangle side lengths must be three positive numbers")
    return s


def triangle_distance(a, b):
    """min over side permutations of sum |a_i - b_pi(i)|."""
    a = _check_sides(a)
    b = _check_sides(b)
    return float(min(np.abs(a - b[list(p)]).sum() for p in permutations(range(3))))


def triangle_dissimilarities(sides):
    """All pairwise triangle distances for an (m, 3) array of side lengths.

    Matching sorted sides is optimal for an L1 assignment on the line, so the
    permutation search reduces to one sort.
    """
    s = np.sort(_check_sides(sides), axis=1)
    out = np.zeros((s.shape[0], s.shape[0]))
    for c in range(3):
        out += np.abs(s[:, None, c] - s[None, :, c])
    return out


@dataclass(eq=False)
class TripletClustering:
    design: object
    triplets: np.ndarray
    labels: np.ndarray
    K: int
    counts: np.ndarray

    def cluster_of(self, triplet):
        hit = np.flatnonzero((self.triplets == np.asarray(triplet)).all(axis=1))
        if hit.size == 0:
            raise ParameterDomainError(f"{tuple(triplet)} is not a sorted triplet of the design")
        return int(self.labels[hit[0]])

    @property
    def mean_perimeter(self):
        per = self.design.triangle_sides.sum(axis=1)
        return np.bincount(self.labels - 1, weights=per, minlength=self.K) / self.counts


def ward_cluster(design, K, max_sites=MAX_CLUSTER_SITES):
    """Ward clustering of all C(D,3) site triplets by triangle shape.

    Cluster ids run 1..K ordered by the lowest-indexed triplet in each cluster.
    """
    D = design.D
    if D > max_sites:
        raise FeasibilityError(
            f"clustering {comb(D, 3)} triplets needs a {comb(D, 3)}^2 dissimilarity matrix; "
            f"D={D} exceeds the limit of {max_sites} sites (raise max_sites to override)")
    m = comb(D, 3)
    K = int(K)
    if not 1 <= K <= m:
        raise ParameterDomainError(f"K must lie in [1, {m}] for D={D}, got {K}")
    if m < 1:
        raise ParameterDomainError("at least three sites are needed for triplets")
    diss = triangle_dissimilarities(design.triangle_sides)
    roots = _backend.impl.ward_roots(diss * diss, K)
    _, labels = np.unique(roots, return_inverse=True)
    labels = labels.astype(np.intp) + 1
    counts = np.bincount(labels - 1, minlength=K).astype(float)
    return TripletClustering(design, design.triplets, labels, K, counts)


def summarize_triplet(panel, clustering):
    """Mean triplet extremal coefficient within each cluster."""
    panel.design.check_same(clustering.design)
    z = _frechet_values(panel)
    return SummaryVector(SummaryMethod.TRIPLET, triplet_means(z, clustering),
                         clustering=clustering)


def triplet_means(z, clustering):
    theta = _backend.impl.triplet_theta(z, clustering.triplets)
    return np.bincount(clustering.labels - 1, weights=theta, minlength=clustering.K) / clustering.counts


# ---------------------------------------------------------------- curve fits

def curve_grid(design, n=GRID_POINTS):
    return np.linspace(0.0, design.diameter, n)


def _theta_curves(family, c2, nu, h):
    rho = correlation_curves(family, c2, nu, h)
    return 1.0 + np.sqrt(np.clip((1.0 - rho) / 2.0, 0.0, None))


def _model_curves(method, family, c2, nu, h):
    theta = _theta_curves(family, c2, nu, h)
    return np.log(theta) if method is SummaryMethod.MADOGRAM else theta


def _box(family):
    return (np.log(C2_BOUNDS), np.log((NU_BOUNDS[0], min(NU_BOUNDS[1], family.max_nu))))


def fit_curve_values(method, family, h, values, n_grid=12, n_starts=3):
    """Least-squares ``phi`` for per-pair estimates ``values`` at distances ``h``.

    A coarse log-spaced grid over the box picks the starts; bounded
    Nelder-Mead in log coordinates refines each one. Returns
    ``(ParamPoint, sse, diagnostics)``.
    """
    method = SummaryMethod.parse(method)
    family = Family.parse(family)
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    (lc_lo, lc_hi), (ln_lo, ln_hi) = _box(family)
    lc, ln = np.meshgrid(np.linspace(lc_lo, lc_hi, n_grid), np.linspace(ln_lo, ln_hi, n_grid))
    lc, ln = lc.ravel(), ln.ravel()
    sse_grid = ((_model_curves(method, family, np.exp(lc), np.exp(ln), h) - values) ** 2).sum(axis=1)

    def sse(x):
        c = _model_curves(method, family, np.exp(x[:1]), np.exp(x[1:]), h)[0]
        return float(((c - values) ** 2).sum())

    order = np.argsort(sse_grid, kind="stable")[:n_starts]
    bounds = [(lc_lo, lc_hi), (ln_lo, ln_hi)]
    runs = []
    for idx in order:
        x0 = np.array([lc[idx], ln[idx]])
        res = minimize(sse, x0, method="Nelder-Mead", bounds=bounds,
                       options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000})
        runs.append({"start": x0.tolist(), "x": res.x.tolist(), "sse": float(res.fun),
                     "success": bool(res.success)})
    good = [r for r in runs if np.isfinite(r["sse"])]
    if not good:
        raise FitError("least-squares curve fit failed from every start", runs)
    best = min(good, key=lambda r: r["sse"])
    c2, nu = np.exp(best["x"])
    at_bound = bool(np.any(np.isclose(best["x"], [lc_lo, ln_lo], atol=1e-6))
                    or np.any(np.isclose(best["x"], [lc_hi, ln_hi], atol=1e-6)))
    return ParamPoint(float(c2), float(nu)), best["sse"], {"runs": runs, "at_boundary": at_bound}


def pair_estimates(method, panel):
    """Per-pair madograms (Gumbel panel) or extremal coefficients (Frechet panel)."""
    method = SummaryMethod.parse(method)
    pairs = panel.design.pairs
    if method is SummaryMethod.MADOGRAM:
        panel.require(MarginScale.UNIT_GUMBEL)
        return madograms(panel.values, pairs)
    if method is SummaryMethod.PAIRWISE:
        return _backend.impl.pair_theta(_frechet_values(panel), pairs)
    raise ParameterDomainError("per-pair estimates exist only for curve methods")


def ols_fit_curve(method, panel, family, grid=None):
    """Fit ``phi`` by least squares over all pairs and return the implied curve."""
    method = SummaryMethod.parse(method)
    family = Family.parse(family)
    values = pair_estimates(method, panel)
    return _curve_summary(method, family, panel.design, values, grid)


def _curve_summary(method, family, design, pair_values, grid=None):
    grid = curve_grid(design) if grid is None else np.asarray(grid, dtype=float)
    phi, sse, diag = fit_curve_values(method, family, design.pair_distances, pair_values)
    curve = _model_curves(method, family, np.array([phi.c2]), np.array([phi.nu]), grid)[0]
    return SummaryVector(method, curve, grid=grid, phi=phi, family=family,
                         meta={"sse": sse, "at_boundary": diag["at_boundary"]})


# ---------------------------------------------------------------- distances

def distance_curve(s, t):
    """Trapezoid-rule integral of |s(h) - t(h)| over the shared grid."""
    if not (s.is_curve and t.is_curve) or s.method is not t.method:
        raise SchemaError("distance_curve needs two curve summaries of the same method")
    if s.grid.shape != t.grid.shape or not np.array_equal(s.grid, t.grid):
        raise SchemaError("curve summaries are on different grids")
    return float(np.trapezoid(np.abs(s.values - t.values), s.grid))


def distance_vector(s, t):
    """Sum of absolute deviations between two cluster-mean vectors."""
    a = np.asarray(getattr(s, "values", s), dtype=float)
    b = np.asarray(getattr(t, "values", t), dtype=float)
    if a.shape != b.shape:
        raise SchemaError(f"summary dimensions differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def summary_distance(s, t):
    if s.method is not t.method:
        raise SchemaError("summaries were built with different methods")
    return distance_curve(s, t) if s.is_curve else distance_vector(s, t)


class Summarizer:
    """Maps unit-Frechet block maxima to a summary for a fixed design.

    The clustering (triplet method) and the curve grid are computed once and
    reused for every simulated panel.
    """

    def __init__(self, method, design, family=Family.WHITTLE_MATERN, K=None, clustering=None,
                 grid=None):
        self.method = SummaryMethod.parse(method)
        self.design = design
        self.family = Family.parse(family)
        self.clustering = None
        self.grid = None
        if self.method is SummaryMethod.TRIPLET:
            if clustering is None:
                if K is None:
                    raise ParameterDomainError("the triplet method needs a cluster count K")
                clustering = ward_cluster(design, K)
            design.check_same(clustering.design)
            self.clustering = clustering
        else:
            self.grid = curve_grid(design) if grid is None else np.asarray(grid, dtype=float)

    @classmethod
    def for_summary(cls, summary, design):
        """Summarizer that reproduces the configuration of ``summary``."""
        if summary.method is SummaryMethod.TRIPLET:
            if summary.clustering is None:
                raise DesignError("triplet summary carries no clustering")
            return cls(summary.method, design, clustering=summary.clustering)
        return cls(summary.method, design, family=summary.family, grid=summary.grid)

    def values(self, z):
        """Summary of an (n, D) array of unit-Frechet values."""
        z = np.ascontiguousarray(z, dtype=float)
        if self.method is SummaryMethod.TRIPLET:
            return SummaryVector(self.method, triplet_means(z, self.clustering),
                                 clustering=self.clustering)
        if self.method is SummaryMethod.MADOGRAM:
            pv = madograms(np.log(z), self.design.pairs)
        else:
            pv = _backend.impl.pair_theta(z, self.design.pairs)
        return _curve_summary(self.method, self.family, self.design, pv, self.grid)

    def __call__(self, panel):
        self.design.check_same(panel.design)
        if panel.scale is MarginScale.UNIT_GUMBEL:
            panel = BlockMaximaPanel(np.exp(panel.values), MarginScale.UNIT_FRECHET, panel.design)
        return self.values(_frechet_values(panel))

    def distance(self, s, t):
        return summary_distance(s, t)

    def check_compatible(self, summary):
        if summary.method is not self.method:
            raise SchemaError("observed summary was built with a different method")
        if self.method is SummaryMethod.TRIPLET:
            if summary.values.shape != (self.clustering.K,):
                raise SchemaError("observed summary has the wrong number of clusters")
        elif summary.grid is None or not np.array_equal(summary.grid, self.grid):
            raise SchemaError("observed summary is on a different grid")

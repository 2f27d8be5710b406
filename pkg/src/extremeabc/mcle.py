"""Pairwise composite likelihood for the Schlather model.

With ``a = sqrt(z1^2 + z2^2 - 2 rho z1 z2)`` the bivariate CDF is
``exp(-V)`` with ``V = (z1 + z2 + a) / (2 z1 z2)``, and the joint density is
``(V1 V2 - V12) exp(-V)`` where subscripts denote partial derivatives.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize

from .corrfuncs import CorrelationModel, Family, ParamPoint
from .design import MarginScale
from .errors import FitError, ParameterDomainError
from .summaries import C2_BOUNDS, NU_BOUNDS


def _density_parts(z1, z2, rho):
    a2 = z1 * z1 + z2 * z2 - 2.0 * rho * z1 * z2
    a = np.sqrt(a2)
    da1 = (z1 - rho * z2) / a
    da2 = (z2 - rho * z1) / a
    d2a = -(1.0 - rho * rho) * z1 * z2 / (a2 * a)
    p = z1 * z2
    v = (z1 + z2 + a) / (2.0 * p)
    v1 = -0.5 / (z1 * z1) + 0.5 * (da1 / p - a / (z1 * p))
    v2 = -0.5 / (z2 * z2) + 0.5 * (da2 / p - a / (z2 * p))
    v12 = 0.5 * (d2a / p - da1 / (z2 * p) - da2 / (z1 * p) + a / (p * p))
    return v, v1 * v2 - v12


def _check_density_args(z1, z2, rho):
    if np.any(~(z1 > 0)) or np.any(~(z2 > 0)):
        raise ParameterDomainError("pair density requires positive arguments")
    if np.any(~((rho >= -1.0) & (rho < 1.0))):
        raise ParameterDomainError("pair density requires -1 <= rho < 1 (rho = 1 is singular)")


def pair_logdensity(z1, z2, rho):
    """Log joint density of a Schlather pair with unit-Frechet margins."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    rho = np.asarray(rho, dtype=float)
    _check_density_args(z1, z2, rho)
    # symmetric in (z1, z2): order the arguments so swapping them is bit-exact
    lo, hi = np.minimum(z1, z2), np.maximum(z1, z2)
    v, c = _density_parts(lo, hi, rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(c) - v
    return out if out.ndim else float(out)


def _pair_terms(z, pairs, rho):
    return pair_logdensity(z[:, pairs[:, 0]], z[:, pairs[:, 1]], rho[None, :])


def composite_loglik(panel, model):
    """Sum over blocks and unique site pairs of the pair log-densities.

    The sum is exactly rounded, so it does not depend on block or pair order.
    """
    panel.require(MarginScale.UNIT_FRECHET)
    pairs = panel.design.pairs
    rho = model(panel.design.pair_distances)
    rho = np.atleast_1d(rho)
    bad = np.flatnonzero(rho >= 1.0)
    if bad.size:
        j, k = pairs[bad[0]]
        raise ParameterDomainError(f"pair ({j}, {k}) has correlation 1; the density is singular")
    terms = _pair_terms(panel.values, pairs, rho)
    nonfinite = np.argwhere(~np.isfinite(terms))
    if nonfinite.size:
        i, p = nonfinite[0]
        j, k = pairs[p]
        raise ParameterDomainError(f"non-finite pair log-density at block {i}, pair ({j}, {k})")
    return math.fsum(terms.ravel())


@dataclass(eq=False)
class CompositeFit:
    phi_hat: ParamPoint
    loglik: float
    converged: bool
    family: Family
    at_boundary: bool = False
    starts: list = field(default_factory=list)

    @property
    def model(self):
        return CorrelationModel(self.family, self.phi_hat.c2, self.phi_hat.nu)


def _box(family):
    nu_hi = min(NU_BOUNDS[1], family.max_nu)
    return np.log([[C2_BOUNDS[0], C2_BOUNDS[1]], [NU_BOUNDS[0], nu_hi]])


def mcle_fit(panel, family=Family.WHITTLE_MATERN, n_grid=7, n_starts=3):
    """Maximize the composite log-likelihood over the box in log coordinates.

    Starts are the best points of an ``n_grid`` x ``n_grid`` log-spaced grid;
    each is refined by bounded Nelder-Mead. A fit that ends on the box edge is
    reported with ``converged=False``.
    """
    panel.require(MarginScale.UNIT_FRECHET)
    family = Family.parse(family)
    z = panel.values
    pairs = panel.design.pairs
    h = panel.design.pair_distances
    box = _box(family)

    def negll(x):
        c2, nu = np.exp(x)
        rho = np.atleast_1d(CorrelationModel(family, c2, min(nu, family.max_nu))(h))
        if np.any(rho >= 1.0):
            return np.inf
        terms = _pair_terms(z, pairs, rho)
        total = math.fsum(terms.ravel())
        return -total if np.isfinite(total) else np.inf

    lc, ln = np.meshgrid(np.linspace(*box[0], n_grid + 2)[1:-1],
                         np.linspace(*box[1], n_grid + 2)[1:-1])
    grid = np.column_stack([lc.ravel(), ln.ravel()])
    grid_vals = np.array([negll(x) for x in grid])
    order = [i for i in np.argsort(grid_vals, kind="stable") if np.isfinite(grid_vals[i])][:n_starts]
    runs = []
    for i in order:
        x0 = grid[i]
        res = minimize(negll, x0, method="Nelder-Mead", bounds=box.tolist(),
                       options={"xatol": 1e-8, "fatol": 1e-9, "maxiter": 2000})
        runs.append({"start": np.exp(x0).tolist(), "start_loglik": -float(grid_vals[i]),
                     "phi": np.exp(res.x).tolist(), "loglik": -float(res.fun),
                     "success": bool(res.success), "message": str(res.message)})
    usable = [r for r in runs if np.isfinite(r["loglik"])]
    if not usable:
        raise FitError("composite likelihood maximization failed from every start", runs)
    best = max(usable, key=lambda r: r["loglik"])
    x = np.log(best["phi"])
    at_boundary = bool(np.any(np.abs(x - box[:, 0]) < 1e-6) or np.any(np.abs(x - box[:, 1]) < 1e-6))
    c2, nu = best["phi"]
    return CompositeFit(ParamPoint(float(c2), float(min(nu, family.max_nu))), best["loglik"],
                        best["success"] and not at_boundary, family, at_boundary, runs)

"""Univariate GEV margins: evaluation, maximum likelihood, scale transforms."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize

from .design import BlockMaximaPanel, MarginScale
from .errors import FitError, ParameterDomainError, TransformError

# Below this |xi| the Gumbel limit is used.
GUMBEL_XI_TOL = 1e-6


@dataclass(frozen=True)
class GevParams:
    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterDomainError(f"GEV scale must be positive, got {self.sigma}")
        if not (np.isfinite(self.mu) and np.isfinite(self.xi)):
            raise ParameterDomainError("GEV location and shape must be finite")


UNIT_FRECHET = GevParams(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class GevFit:
    params: GevParams
    se: tuple
    loglik: float
    converged: bool
    starts: list = field(default_factory=list, compare=False)


def _reduced(params, y):
    return 1.0 + params.xi * (np.asarray(y, dtype=float) - params.mu) / params.sigma


def gev_cdf(params, y):
    y = np.asarray(y, dtype=float)
    if abs(params.xi) < GUMBEL_XI_TOL:
        out = np.exp(-np.exp(-(y - params.mu) / params.sigma))
    else:
        t = _reduced(params, y)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            inside = np.exp(-np.maximum(t, 0.0) ** (-1.0 / params.xi))
        # outside the support: below the lower end (xi > 0) or above the upper end (xi < 0)
        out = np.where(t > 0, inside, 0.0 if params.xi > 0 else 1.0)
    return out if out.ndim else float(out)


def gev_quantile(params, p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ParameterDomainError("probabilities must lie in (0, 1)")
    w = -np.log(p)
    if abs(params.xi) < GUMBEL_XI_TOL:
        out = params.mu - params.sigma * np.log(w)
    else:
        out = params.mu + params.sigma * (w ** (-params.xi) - 1.0) / params.xi
    return out if out.ndim else float(out)


def gev_loglik(params, y):
    y = np.asarray(y, dtype=float)
    return -_nll(params.mu, params.sigma, params.xi, y)


def _nll(mu, sigma, xi, y):
    if not sigma > 0:
        return np.inf
    u = (y - mu) / sigma
    n = y.size
    if abs(xi) < GUMBEL_XI_TOL:
        return n * math.log(sigma) + u.sum() + np.exp(-u).sum()
    t = 1.0 + xi * u
    if np.any(t <= 0):
        return np.inf
    logt = np.log(t)
    return n * math.log(sigma) + (1.0 + 1.0 / xi) * logt.sum() + np.exp(-logt / xi).sum()


def pwm_start(y):
    """Probability-weighted-moment estimates (Hosking's approximation)."""
    x = np.sort(np.asarray(y, dtype=float))
    n = x.size
    i = np.arange(n)
    b0 = x.mean()
    b1 = np.sum(i / (n - 1) * x) / n
    b2 = np.sum(i * (i - 1) / ((n - 1) * (n - 2)) * x) / n
    c = (2 * b1 - b0) / (3 * b2 - b0) - math.log(2) / math.log(3)
    k = 7.8590 * c + 2.9554 * c * c
    if abs(k) < 1e-6:
        sigma = (2 * b1 - b0) / math.log(2)
        return GevParams(b0 - 0.5772156649015329 * sigma, sigma, 0.0)
    g = math.gamma(1 + k)
    sigma = (2 * b1 - b0) * k / (g * (1 - 2 ** (-k)))
    if not sigma > 0:
        sigma = float(np.std(x)) or 1.0
    return GevParams(b0 + sigma * (g - 1) / k, sigma, -k)


def _feasible_start(mu, sigma, xi, y):
    need = np.max(-xi * (y - mu))
    if need >= sigma:
        sigma = 1.1 * need + 1e-3
    return np.array([mu, math.log(sigma), xi])


def _hessian(f, x, step=1e-4):
    k = x.size
    H = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            ea = np.zeros(k)
            eb = np.zeros(k)
            ea[a] = step
            eb[b] = step
            val = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * step * step)
            H[a, b] = H[b, a] = val
    return H


def gev_fit_mle(sample, n_starts=5):
    """Maximum likelihood GEV fit with multi-start Nelder-Mead.

    The data are standardized before optimizing, which makes the fit
    equivariant under increasing affine maps. Standard errors come from the
    inverse of a finite-difference Hessian of the negative log-likelihood.
    """
    y = np.asarray(sample, dtype=float).ravel()
    if y.size < 20:
        raise ParameterDomainError("GEV fitting needs at least 20 block maxima")
    if not np.all(np.isfinite(y)):
        raise ParameterDomainError("sample contains non-finite values")
    center = y.mean()
    spread = y.std()
    if not spread > 0:
        raise FitError("degenerate sample: all values are equal")
    ys = (y - center) / spread

    def objective(theta):
        return _nll(theta[0], math.exp(theta[1]), theta[2], ys)

    pwm = pwm_start(ys)
    offsets = [0.0, -0.2, 0.2, -0.1, 0.1][:n_starts]
    results = []
    for off in offsets:
        x0 = _feasible_start(pwm.mu, pwm.sigma, pwm.xi + off, ys)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12 * y.size,
                                "maxiter": 20000, "maxfev": 40000})
        results.append({"start": x0.tolist(), "x": res.x.tolist(), "nll": float(res.fun),
                        "success": bool(res.success), "message": str(res.message),
                        "start_nll": float(objective(x0))})
    usable = [r for r in results if np.isfinite(r["nll"])]
    if not usable or not any(r["success"] for r in usable):
        raise FitError("GEV likelihood maximization failed from every start", results)
    best = min(usable, key=lambda r: r["nll"])
    # a start that stalled on the evaluation cap still counts if another one
    # converged to the same optimum
    converged = any(r["success"] and r["nll"] - best["nll"] <= 1e-8 * abs(best["nll"])
                    for r in usable)
    mu_s, log_sigma_s, xi = best["x"]
    sigma_s = math.exp(log_sigma_s)

    H = _hessian(lambda p: _nll(p[0], p[1], p[2], ys), np.array([mu_s, sigma_s, xi]))
    try:
        cov = np.linalg.inv(H)
        se_s = np.sqrt(np.diag(cov))
        if not np.all(np.isfinite(se_s)) or np.any(np.diag(cov) <= 0):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        se_s = np.full(3, np.nan)
    params = GevParams(center + spread * mu_s, spread * sigma_s, xi)
    se = (float(spread * se_s[0]), float(spread * se_s[1]), float(se_s[2]))
    loglik = -best["nll"] - y.size * math.log(spread)
    return GevFit(params, se, float(loglik), converged, results)


def _params(p):
    return p.params if isinstance(p, GevFit) else p


def to_frechet_values(y, params):
    """Elementwise unit-Frechet transform; returns (z, bad_mask)."""
    y = np.asarray(y, dtype=float)
    if abs(params.xi) < GUMBEL_XI_TOL:
        z = np.exp((y - params.mu) / params.sigma)
    else:
        t = _reduced(params, y)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            z = np.where(t > 0, np.abs(t) ** (1.0 / params.xi), np.nan)
    bad = ~(np.isfinite(z) & (z > 0))
    return z, bad


def from_frechet_values(z, params):
    """Inverse of ``to_frechet_values``: unit-Frechet back to the data scale."""
    z = np.asarray(z, dtype=float)
    if abs(params.xi) < GUMBEL_XI_TOL:
        return params.mu + params.sigma * np.log(z)
    return params.mu + params.sigma * (z ** params.xi - 1.0) / params.xi


def to_unit_frechet(panel, fits):
    panel.require(MarginScale.RAW)
    fits = [_params(f) for f in fits]
    if len(fits) != panel.design.D:
        raise ParameterDomainError("one set of GEV parameters per site is required")
    out = np.empty_like(panel.values)
    for d, p in enumerate(fits):
        z, bad = to_frechet_values(panel.values[:, d], p)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise TransformError(
                f"value {panel.values[i, d]!r} at block {i}, site {panel.design.ids[d]} "
                "lies outside the fitted GEV support", block=i, site=panel.design.ids[d])
        out[:, d] = z
    return BlockMaximaPanel(out, MarginScale.UNIT_FRECHET, panel.design, dict(panel.meta))


def frechet_to_gumbel(panel):
    panel.require(MarginScale.UNIT_FRECHET)
    if not np.all(panel.values > 0):
        raise ParameterDomainError("unit-Frechet values must be positive")
    return BlockMaximaPanel(np.log(panel.values), MarginScale.UNIT_GUMBEL, panel.design,
                            dict(panel.meta))


def gumbel_to_frechet(panel):
    panel.require(MarginScale.UNIT_GUMBEL)
    return BlockMaximaPanel(np.exp(panel.values), MarginScale.UNIT_FRECHET, panel.design,
                            dict(panel.meta))


def fit_panel(panel):
    """Independent GEV fit at every site of a raw panel."""
    panel.require(MarginScale.RAW)
    return [gev_fit_mle(panel.values[:, d]) for d in range(panel.design.D)]


def negate(panel):
    """Minima are handled as maxima of the negated data."""
    return BlockMaximaPanel(-panel.values, panel.scale, panel.design,
                            {**panel.meta, "negated": not panel.meta.get("negated", False)})

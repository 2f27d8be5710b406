"""Integrated squared error between a true and an estimated correlation curve."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from ..errors import ParameterDomainError

LEVEL = 0.1
GRID_POINTS = 500
_MAX_REACH = 1e6


@dataclass(frozen=True)
class MseResult:
    mse: float
    upper: float
    capped: bool

    def __float__(self):
        return self.mse


def correlation_reach(model, level=LEVEL, limit=None):
    """Distance at which ``model`` decays to ``level``.

    Returns ``(h, capped)``; when the curve is still above ``level`` at
    ``limit`` the limit itself is returned with ``capped=True``.
    """
    f = lambda h: model(h) - level
    hi = limit if limit is not None else 1.0
    while limit is None and f(hi) > 0 and hi < _MAX_REACH:
        hi *= 2
    if f(hi) > 0:
        return float(hi), True
    return float(bisect(f, 0.0, hi, xtol=1e-8, rtol=1e-14, maxiter=500)), False


def mse_curve(true_model, rho_hat, diameter=None, n_grid=GRID_POINTS):
    """Trapezoid integral of (rho_true - rho_hat)^2 over {h > 0: rho_true >= 0.1}.

    ``rho_hat`` is a callable mapping a distance array to estimated
    correlations. The upper limit is capped at ``diameter`` when the true
    curve has not decayed to 0.1 by then.
    """
    if diameter is not None and not diameter > 0:
        raise ParameterDomainError("diameter must be positive")
    upper, capped = correlation_reach(true_model, LEVEL, diameter)
    h = np.linspace(0.0, upper, n_grid)
    est = np.asarray(rho_hat(h), dtype=float)
    if est.shape != h.shape:
        raise ParameterDomainError("estimated curve has the wrong shape")
    return MseResult(float(np.trapezoid((true_model(h) - est) ** 2, h)), upper, capped)


def band_coverage(true_model, band, upper, n_grid=GRID_POINTS):
    """Share of the grid on [0, upper] where the true curve lies inside ``band``.

    ``band`` maps a distance array to (lower, upper) arrays; on a uniform grid
    this is the covered fraction of the integration range.
    """
    h = np.linspace(0.0, upper, n_grid)
    lo, hi = band(h)
    truth = true_model(h)
    return float(np.mean((truth >= lo - 1e-12) & (truth <= hi + 1e-12)))

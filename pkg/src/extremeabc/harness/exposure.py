"""Posterior-predictive exposure: how much weight lies beyond a threshold."""
from dataclasses import dataclass, field

import numpy as np

from .. import streams
from ..corrfuncs import CorrelationModel
from ..errors import ParameterDomainError
from ..margins import from_frechet_values
from ..maxstable import DEFAULT_TRUNCATION_BOUND, correlation_matrix, field_factor, simulate_values


@dataclass
class ExposureReport:
    """``totals[s, t]``: exposed weight in simulation ``s`` at threshold ``t``."""

    thresholds: np.ndarray
    totals: np.ndarray
    counts: np.ndarray
    total_weight: float
    minima: bool
    failed_sites: dict = field(default_factory=dict)

    @property
    def n_sims(self):
        return self.totals.shape[0]

    def intermediate_fraction(self, low=None, high=None):
        """Per threshold, share of simulations with exposure strictly inside (low, high).

        Defaults to the open interval between nothing and everything exposed.
        """
        low = 0.0 if low is None else low
        high = self.total_weight if high is None else high
        inside = (self.totals > low) & (self.totals < high)
        return inside.mean(axis=0)

    def quantiles(self, q):
        return np.quantile(self.totals, q, axis=0)


def predict_exposure(posterior, design, margins, weights, thresholds, n_sims, minima=False,
                     seed=0, truncation_bound=DEFAULT_TRUNCATION_BOUND):
    """Simulate exposure under parameter uncertainty.

    Each simulation resamples a particle by weight, simulates one Schlather
    block at ``design``, maps it to the data scale with the per-site GEV
    ``margins`` and sums ``weights`` over sites beyond each threshold (above
    it, or below it when ``minima`` is set, in which case ``margins`` describe
    the negated data).
    """
    weights = np.asarray(weights, dtype=float)
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if len(margins) != design.D or weights.shape != (design.D,):
        raise ParameterDomainError("one margin and one weight per target site are required")
    if np.any(~(weights >= 0)) or not np.all(np.isfinite(weights)):
        raise ParameterDomainError("exposure weights must be finite and non-negative")
    if n_sims < 1:
        raise ParameterDomainError("n_sims must be at least 1")
    base = streams.as_path(seed)
    picks = streams.generator(*base, streams.RESAMPLE).choice(
        len(posterior), size=int(n_sims), p=posterior.weights)
    factors = {}
    totals = np.empty((int(n_sims), thresholds.size))
    counts = np.empty_like(totals, dtype=np.intp)
    failed = {}
    for s, idx in enumerate(picks):
        if idx not in factors:
            c2, nu = posterior.phi[idx]
            model = CorrelationModel(posterior.family, float(c2), float(nu))
            factors[idx] = field_factor(correlation_matrix(design, model))
        z = simulate_values(factors[idx], 1, (*base, s), truncation_bound)[0]
        y = np.array([from_frechet_values(z[d], margins[d]) for d in range(design.D)])
        bad = ~np.isfinite(y)
        for d in np.flatnonzero(bad):
            failed[design.ids[d]] = failed.get(design.ids[d], 0) + 1
        if minima:
            y = -y
            beyond = y[None, :] < thresholds[:, None]
        else:
            beyond = y[None, :] > thresholds[:, None]
        beyond &= ~bad[None, :]
        totals[s] = beyond @ weights
        counts[s] = beyond.sum(axis=1)
    return ExposureReport(thresholds, totals, counts, float(weights.sum()), bool(minima), failed)

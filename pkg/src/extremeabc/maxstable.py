"""Simulation of Schlather extremal Gaussian processes on a finite design.

The process is ``Z(x) = max_i s_i max(0, Y_i(x))`` where ``s_i`` are the points
of a Poisson process with intensity ``mu^-1 s^-2 ds``, ``mu = E max(0, Y)`` and
``Y_i`` are independent standard Gaussian fields. Points are generated in
decreasing order ``s_i = 1 / (mu * Gamma_i)`` from unit-rate arrival times and the
loop stops once ``s_i * truncation_bound`` falls below the current minimum of
``Z``; this treats ``max(0, Y)`` as bounded by ``truncation_bound``, the only
approximation in the simulator.
"""
import logging

import numpy as np

from . import _backend, streams
from .corrfuncs import CorrelationModel, extremal_coeff_pair
from .design import BlockMaximaPanel, MarginScale, SpatialDesign
from .errors import FactorizationError, ParameterDomainError, SimulationBudgetError

__all__ = [
    "SpatialDesign", "BlockMaximaPanel", "correlation_matrix", "field_factor",
    "sample_gaussian_field", "simulate_schlather", "bivariate_cdf",
]

log = logging.getLogger(__name__)

DEFAULT_TRUNCATION_BOUND = 4.0
MAX_SPECTRAL_POINTS = 10 ** 6
_JITTER = 1e-10


def correlation_matrix(design, model):
    return model(design.distances)


def field_factor(corr):
    """Matrix ``L`` with ``L @ L.T == corr``.

    Cholesky first, then once more with 1e-10 added to the diagonal. Matrices
    that are singular but positive semi-definite (duplicate sites, very smooth
    long-range fields) fall through to a clipped symmetric eigen square root.
    """
    corr = np.asarray(corr, dtype=float)
    for jitter in (0.0, _JITTER):
        try:
            return np.linalg.cholesky(corr + jitter * np.eye(corr.shape[0]))
        except np.linalg.LinAlgError:
            continue
    vals, vecs = np.linalg.eigh(corr)
    tol = corr.shape[0] * np.finfo(float).eps * max(vals.max(), 1.0)
    if vals.min() < -1e3 * tol:
        raise FactorizationError(
            f"correlation matrix is not positive semi-definite (min eigenvalue {vals.min():.3g})")
    vals = np.where(vals > tol, vals, 0.0)
    return np.ascontiguousarray(vecs * np.sqrt(vals))


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return streams.generator(*streams.as_path(rng))


def sample_gaussian_field(design, model, rng, size=None):
    """Zero-mean, unit-variance Gaussian field at the design sites.

    Returns shape ``(D,)`` or ``(size, D)``.
    """
    factor = field_factor(correlation_matrix(design, model))
    gen = _as_generator(rng)
    n = 1 if size is None else int(size)
    g = gen.standard_normal((n, design.D))
    out = g @ factor.T
    return out[0] if size is None else out


def simulate_values(factor, n_blocks, seed, truncation_bound=DEFAULT_TRUNCATION_BOUND,
                    max_points=MAX_SPECTRAL_POINTS, backend=None):
    """Raw simulation on a precomputed field factor; returns an (n, D) array."""
    if n_blocks < 1:
        raise ParameterDomainError("n_blocks must be at least 1")
    if not truncation_bound > 0:
        raise ParameterDomainError("truncation_bound must be positive")
    kern = _backend.kernels(backend)
    block_streams = streams.BlockStreams.from_seed(*streams.as_path(seed), streams.SIMULATION)
    out = np.empty((int(n_blocks), factor.shape[0]))
    failed = kern.simulate_blocks(factor, block_streams, int(n_blocks), float(truncation_bound),
                                  int(max_points), out)
    if failed >= 0:
        raise SimulationBudgetError(
            f"block {failed} needed more than {max_points} spectral points")
    return out


def simulate_schlather(design, model, n_blocks, seed, truncation_bound=DEFAULT_TRUNCATION_BOUND,
                       max_points=MAX_SPECTRAL_POINTS, backend=None):
    """Simulate ``n_blocks`` independent blocks with unit-Frechet margins.

    ``seed`` is an integer or a tuple of integers addressing the random stream;
    block ``b`` always uses sub-stream ``b``, so results are reproducible
    regardless of how blocks are scheduled.
    """
    factor = field_factor(correlation_matrix(design, model))
    values = simulate_values(factor, n_blocks, seed, truncation_bound, max_points, backend)
    meta = {
        "seed": list(streams.as_path(seed)),
        "model": {"family": model.family.value, "c1": model.c1, "c2": model.c2, "nu": model.nu},
        "truncation_bound": float(truncation_bound),
    }
    return BlockMaximaPanel(values, MarginScale.UNIT_FRECHET, design, meta=meta)


def bivariate_cdf(z1, z2, rho):
    """P(Z1 <= z1, Z2 <= z2) for the Schlather process at correlation ``rho``."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(~(z1 > 0)) or np.any(~(z2 > 0)):
        raise ParameterDomainError("bivariate_cdf requires positive arguments")
    if np.any(~((rho >= -1.0) & (rho <= 1.0))):
        raise ParameterDomainError("correlation must lie in [-1, 1]")
    inner = 1.0 - 2.0 * (rho + 1.0) * z1 * z2 / (z1 + z2) ** 2
    v = 0.5 * (1.0 / z1 + 1.0 / z2) * (1.0 + np.sqrt(np.maximum(inner, 0.0)))
    out = np.exp(-v)
    return out if out.ndim else float(out)


def pair_extremal_coefficient(model, h):
    """Theoretical theta(h) for ``model``."""
    return extremal_coeff_pair(model(h))


__all__ += ["CorrelationModel", "simulate_values", "pair_extremal_coefficient"]

"""Gaussian-process correlation families and the Schlather extremal coefficient."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .errors import ParameterDomainError


class Family(str, Enum):
    WHITTLE_MATERN = "whittle-matern"
    CAUCHY = "cauchy"
    POWERED_EXPONENTIAL = "powered-exponential"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"matern": cls.WHITTLE_MATERN, "whittle-matern": cls.WHITTLE_MATERN,
                   "cauchy": cls.CAUCHY, "powered-exponential": cls.POWERED_EXPONENTIAL,
                   "powexp": cls.POWERED_EXPONENTIAL}
        try:
            return aliases[key]
        except KeyError:
            raise ParameterDomainError(f"unknown correlation family {value!r}") from None

    @property
    def max_nu(self):
        return 2.0 if self is Family.POWERED_EXPONENTIAL else np.inf


@dataclass(frozen=True)
class ParamPoint:
    """The inferential target: range ``c2`` and smoothness ``nu``."""

    c2: float
    nu: float

    def as_array(self):
        return np.array([self.c2, self.nu])


@dataclass(frozen=True)
class CorrelationModel:
    family: Family
    c2: float
    nu: float
    c1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        check_params(self.family, self.c2, self.nu, self.c1)

    @classmethod
    def from_phi(cls, family, phi, c1=1.0):
        c2, nu = (phi.c2, phi.nu) if isinstance(phi, ParamPoint) else phi
        return cls(family, float(c2), float(nu), c1)

    @property
    def phi(self):
        return ParamPoint(self.c2, self.nu)

    def __call__(self, h):
        return correlation(self, h)


def check_params(family, c2, nu, c1=1.0):
    family = Family.parse(family)
    if not 0.0 <= c1 <= 1.0:
        raise ParameterDomainError(f"nugget c1={c1} outside [0, 1]")
    if not (np.isfinite(c2) and c2 > 0.0):
        raise ParameterDomainError(f"range c2={c2} must be positive")
    if not (np.isfinite(nu) and nu > 0.0):
        raise ParameterDomainError(f"smoothness nu={nu} must be positive")
    if nu > family.max_nu:
        raise ParameterDomainError(f"smoothness nu={nu} exceeds {family.max_nu} for {family.value}")


def _unit_correlation(family, c2, nu, h):
    """Correlation with c1 = 1; arguments broadcast, no validation."""
    x = h / c2
    if family is Family.WHITTLE_MATERN:
        return _backend.impl.matern(nu, x)
    if family is Family.CAUCHY:
        return (1.0 + x * x) ** (-nu)
    return np.exp(-(x ** nu))


def correlation(model, h):
    """rho(h) for ``model``; exactly ``c1`` at h = 0."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(~(h_arr >= 0.0)):
        raise ParameterDomainError("distances must be non-negative")
    rho = model.c1 * _unit_correlation(model.family, model.c2, model.nu, h_arr)
    rho = np.where(h_arr == 0.0, model.c1, rho)
    return rho if rho.ndim else float(rho)


def correlation_curves(family, c2, nu, h, c1=1.0):
    """Correlation of many parameter points on a shared grid.

    Returns an array of shape ``(len(c2), len(h))``.
    """
    family = Family.parse(family)
    c2 = np.asarray(c2, dtype=float)[:, None]
    nu = np.asarray(nu, dtype=float)[:, None]
    h = np.asarray(h, dtype=float)[None, :]
    rho = c1 * _unit_correlation(family, c2, nu, h)
    return np.where(h == 0.0, c1, rho)


def bessel_k(nu, x):
    """Modified Bessel function of the second (third) kind K_nu(x), x > 0."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise ParameterDomainError("bessel_k requires x > 0")
    scaled = _backend.impl.kv_scaled(nu, x_arr)
    with np.errstate(over="ignore", invalid="ignore"):
        out = scaled * np.exp(-x_arr)
    if np.any(~np.isfinite(out)):
        raise OverflowError("bessel_k overflowed for the requested arguments")
    return out if out.ndim else float(out)


def extremal_coeff_pair(rho):
    """theta = 1 + sqrt((1 - rho) / 2), the Schlather pairwise extremal coefficient."""
    r = np.asarray(rho, dtype=float)
    if np.any(~((r >= -1.0) & (r <= 1.0))):
        raise ParameterDomainError("correlation must lie in [-1, 1]")
    out = 1.0 + np.sqrt((1.0 - r) / 2.0)
    return out if out.ndim else float(out)

"""Pure-Python implementations of the numerical kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and the same random-number consumption order. This module is used
when the extension is unavailable or ``EXTREMEABC_PURE_PYTHON`` is set.
"""
import math

import numpy as np

# Spectral mean E max(0, Y) for a standard normal Y.
SPECTRAL_MEAN = 1.0 / math.sqrt(2.0 * math.pi)

# Taylor coefficients of 1/Gamma(1 + x) about 0, enough for |x| <= 1/2.
_RGAMMA1P = (
    1.0,
    0.5772156649015329,
    -0.6558780715202539,
    -0.04200263503409524,
    0.16653861138229148,
    -0.04219773455554433,
    -0.009621971527876973,
    0.0072189432466631,
    -0.0011651675918590652,
    -0.00021524167411495098,
    0.0001280502823881162,
    -2.013485478078824e-05,
    -1.2504934821426706e-06,
    1.133027231981696e-06,
    -2.056338416977607e-07,
    6.116095104481416e-09,
    5.002007644469223e-09,
    -1.18127457048702e-09,
    1.0434267116911005e-10,
    7.782263439905071e-12,
    -3.696805618642206e-12,
    5.100370287454476e-13,
    -2.0583260535665066e-14,
    -5.348122539423018e-15,
    1.2267786282382608e-15,
    -1.1812593016974588e-16,
)

_EPS = 1e-16
_MAXIT = 10000


def _gamma_terms(mu):
    # gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
    mu2 = mu * mu
    gam1 = 0.0
    for c in reversed(_RGAMMA1P[1::2]):
        gam1 = gam1 * mu2 + c
    gam1 = -gam1
    gam2 = 0.0
    for c in reversed(_RGAMMA1P[0::2]):
        gam2 = gam2 * mu2 + c
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _kmu_pair_scaled(xmu, x):
    """exp(x) * (K_mu(x), K_{mu+1}(x)) for |mu| <= 1/2."""
    xmu2 = xmu * xmu
    if x < 2.0:
        x2 = 0.5 * x
        pimu = math.pi * xmu
        fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = xmu * d
        fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _gamma_terms(xmu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, _MAXIT + 1):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= i - xmu
            q /= i + xmu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * _EPS:
                break
        scale = math.exp(x)
        return total * scale, total1 * (2.0 / x) * scale
    # Steed's continued fraction, already scaled by exp(x)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - xmu2
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) / s
    k1 = kmu * (xmu + x + 0.5 - h) / x
    return kmu, k1


def kv_scaled_scalar(nu, x):
    """exp(x) * K_nu(x) for x > 0 (order taken in absolute value)."""
    nu = abs(nu)
    nl = int(nu + 0.5)
    xmu = nu - nl
    kmu, k1 = _kmu_pair_scaled(xmu, x)
    xi2 = 2.0 / x
    for i in range(1, nl + 1):
        knext = (xmu + i) * xi2 * k1 + kmu
        kmu = k1
        k1 = knext
    return kmu


def kv_scaled(nu, x):
    nu, x = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    out = np.empty(nu.shape)
    flat_nu, flat_x, flat_out = nu.ravel(), x.ravel(), out.reshape(-1)
    for i in range(flat_out.size):
        flat_out[i] = kv_scaled_scalar(flat_nu[i], flat_x[i])
    return out


def _matern_scalar(nu, x):
    if x <= 0.0:
        return 1.0
    k = kv_scaled_scalar(nu, x)
    if not math.isfinite(k):
        return 1.0
    logv = (1.0 - nu) * math.log(2.0) - math.lgamma(nu) + nu * math.log(x) - x + math.log(k)
    return min(math.exp(logv), 1.0)


def matern(nu, x):
    """2^(1-nu)/Gamma(nu) x^nu K_nu(x), with the limit 1 at x = 0."""
    nu, x = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    out = np.empty(nu.shape)
    flat_nu, flat_x, flat_out = nu.ravel(), x.ravel(), out.reshape(-1)
    for i in range(flat_out.size):
        flat_out[i] = _matern_scalar(flat_nu[i], flat_x[i])
    return out


def simulate_blocks(factor, streams, n_blocks, bound, max_points, out):
    """Fill ``out`` (n_blocks x D) with Schlather blocks.

    Block ``b`` draws from ``streams`` after ``streams.seek(b)``. Returns -1 on
    success or the index of the first block that exhausted ``max_points``.
    """
    factor = np.asarray(factor, dtype=float)
    D = factor.shape[0]
    gen = np.random.Generator(streams.bitgen)
    for b in range(n_blocks):
        streams.seek(b)
        z = np.zeros(D)
        zmin = 0.0
        gamma = 0.0
        done = False
        for _ in range(max_points):
            gamma += gen.standard_exponential()
            s = 1.0 / (SPECTRAL_MEAN * gamma)
            if s * bound < zmin:
                done = True
                break
            y = factor @ gen.standard_normal(D)
            np.maximum(z, s * y, out=z)
            zmin = z.min()
        if not done:
            return b
        out[b, :] = z
    return -1


def pair_theta(z, pairs):
    """n / sum_i 1/max(z_ij, z_ik) for each (j, k) row of ``pairs``."""
    inv = 1.0 / np.asarray(z, dtype=float)
    pairs = np.asarray(pairs, dtype=np.intp)
    m = np.minimum(inv[:, pairs[:, 0]], inv[:, pairs[:, 1]])
    return z.shape[0] / m.sum(axis=0)


def triplet_theta(z, triplets):
    inv = 1.0 / np.asarray(z, dtype=float)
    t = np.asarray(triplets, dtype=np.intp)
    m = np.minimum(np.minimum(inv[:, t[:, 0]], inv[:, t[:, 1]]), inv[:, t[:, 2]])
    return z.shape[0] / m.sum(axis=0)


def ward_roots(sqdist, n_clusters):
    """Agglomerate with Ward's Lance-Williams update down to ``n_clusters``.

    ``sqdist`` is the full symmetric matrix of squared dissimilarities. Ties go
    to the lexicographically smallest (i, j), i < j. Returns, for every item,
    the index of the lowest-numbered member of its final cluster.
    """
    d = np.array(sqdist, dtype=float, copy=True)
    n = d.shape[0]
    np.fill_diagonal(d, np.inf)
    size = np.ones(n)
    parent = np.arange(n)
    active = n
    while active > n_clusters:
        flat = int(np.argmin(d))
        a, b = divmod(flat, n)
        if a > b:
            a, b = b, a
        na, nb, dab = size[a], size[b], d[a, b]
        row = ((na + size) * d[a] + (nb + size) * d[b] - size * dab) / (na + nb + size)
        row[a] = np.inf
        row[b] = np.inf
        d[a, :] = row
        d[:, a] = row
        d[b, :] = np.inf
        d[:, b] = np.inf
        size[a] = na + nb
        parent[b] = a
        active -= 1
    roots = parent.copy()
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        roots[i] = r
    return roots
